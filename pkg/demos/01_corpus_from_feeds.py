"""Build a labeled corpus from NVD-style feeds, then cut balanced splits."""
import gzip
import tempfile
from pathlib import Path

from iotcti.corpus import IngestReport, build_balanced_splits, ingest_feeds, strip_cve_tags
from iotcti.synthetic import feed_from_docs, planted_corpus

tmp = Path(tempfile.mkdtemp())
docs = planted_corpus(300, seed=0)

# two yearly feeds; the second one is gzipped like the real downloads
(tmp / "nvdcve-1.1-2018.json").write_bytes(feed_from_docs(docs[:150], 2018))
(tmp / "nvdcve-1.1-2019.json.gz").write_bytes(gzip.compress(feed_from_docs(docs[150:], 2019)))

report = IngestReport()
pool = ingest_feeds(sorted(tmp.iterdir()), report)
print("ingest:", report.as_dict())
print(pool[0])

# hardware CPE ("cpe:2.3:h:...") is what makes a record related
print(strip_cve_tags(pool[0].text))

split = build_balanced_splits(pool, train_size=200, val_size=80, seed=42, variant="no_cve_tag")
print(len(split.train), "train /", len(split.validation), "validation")
print(sum(d.label == "related" for d in split.train), "related in train")
print(split.train[0].text)  # tag gone
