import gzip
import itertools
import json
import re

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from iotcti.corpus import (
    CapacityError,
    CveRecord,
    DatasetSplit,
    FeedParseError,
    IngestReport,
    LabeledDoc,
    build_balanced_splits,
    ingest_feeds,
    label_by_cpe,
    parse_nvd_feed,
    read_jsonl,
    strip_cve_tags,
    write_jsonl,
)
from iotcti.synthetic import nvd_feed, nvd_item


def feed_bytes(*items):
    return json.dumps(nvd_feed(list(items))).encode()


def rec(cpes, desc="Buffer overflow in device"):
    return CveRecord("CVE-2019-1234", desc, tuple(cpes), 2019, "active")


# -- parse_nvd_feed --------------------------------------------------------

def test_rejected_item_status():
    recs = parse_nvd_feed(feed_bytes(nvd_item("CVE-2018-0001", "** REJECT ** DO NOT USE THIS CANDIDATE", [])))
    assert len(recs) == 1 and recs[0].status == "rejected"


def test_empty_feed():
    assert parse_nvd_feed(feed_bytes()) == []


def test_malformed_json():
    with pytest.raises(FeedParseError):
        parse_nvd_feed(b"{not json")


def test_fields_and_nested_nodes():
    item = nvd_item("CVE-2017-123456", "Router flaw", ["cpe:2.3:o:vendor:fw:1:*:*:*:*:*:*:*"])
    item["configurations"]["nodes"][0]["children"] = [
        {"operator": "OR", "cpe_match": [{"vulnerable": False, "cpe23Uri": "cpe:2.3:h:vendor:box:-:*:*:*:*:*:*:*"}]}
    ]
    item["cve"]["description"]["description_data"].insert(0, {"lang": "es", "value": "Fallo"})
    (r,) = parse_nvd_feed(feed_bytes(item))
    assert r.id == "CVE-2017-123456" and r.year == 2017 and r.description == "Router flaw"
    assert r.cpe_uris == ("cpe:2.3:o:vendor:fw:1:*:*:*:*:*:*:*", "cpe:2.3:h:vendor:box:-:*:*:*:*:*:*:*")
    assert label_by_cpe(r) == "related"


def test_gzip_feed():
    raw = gzip.compress(feed_bytes(nvd_item("CVE-2016-0001", "x", [])))
    assert [r.id for r in parse_nvd_feed(raw)] == ["CVE-2016-0001"]


def test_bad_items_are_skipped_not_fatal():
    good = nvd_item("CVE-2016-0002", "ok", [])
    no_id = nvd_item("CVE-2016-0003", "ok", [])
    no_id["cve"]["CVE_data_meta"] = {}
    no_desc = nvd_item("CVE-2016-0004", "ok", [])
    no_desc["cve"]["description"]["description_data"] = []
    skipped = []
    recs = parse_nvd_feed(feed_bytes(no_id, good, no_desc), skipped)
    assert [r.id for r in recs] == ["CVE-2016-0002"]
    assert [pos for pos, _ in skipped] == [0, 2]


def test_record_invariants():
    with pytest.raises(ValueError):
        CveRecord("CVE-19-1", "x", (), 2019, "active")
    with pytest.raises(ValueError):
        CveRecord("CVE-2019-1234", "** REJECT ** x", (), 2019, "active")


# -- label_by_cpe ----------------------------------------------------------

@pytest.mark.parametrize(
    "cpes, label",
    [
        (["cpe:2.3:h:ubiquiti:unifi_protect:-:*:*:*:*:*:*:*"], "related"),
        (["cpe:2.3:a:vendor:app:1.0:*:*:*:*:*:*:*"], "unrelated"),
        (["cpe:/h:cisco:router:1.0"], "related"),
        (["cpe:/a:cisco:ios"], "unrelated"),
        (["cpe:2.3:a:x:y:*:*:*:*:*:*:*:*", "cpe:2.3:h:x:z:*:*:*:*:*:*:*:*"], "related"),
        ([], "unrelated"),
    ],
)
def test_label_by_cpe(cpes, label):
    assert label_by_cpe(rec(cpes)) == label


def test_unparseable_cpe_counts_warning():
    warnings = []
    assert label_by_cpe(rec(["garbage", "cpe:2.3:h:a:b"]), warnings) == "related"
    assert label_by_cpe(rec(["h:vendor"]), warnings) == "unrelated"
    assert warnings == ["garbage", "h:vendor"]


def test_label_rejects_rejected_record():
    r = CveRecord("CVE-2019-0001", "** REJECT ** gone", (), 2019, "rejected")
    with pytest.raises(ValueError):
        label_by_cpe(r)


@settings(max_examples=100, deadline=None)
@given(st.text(min_size=1, max_size=30).filter(lambda s: not s.startswith("** REJECT **")))
def test_label_ignores_description(desc):
    cpes = ("cpe:2.3:h:a:b:*:*:*:*:*:*:*:*",)
    assert label_by_cpe(rec(cpes, desc)) == label_by_cpe(rec(cpes)) == "related"


# -- strip_cve_tags --------------------------------------------------------

def test_strip_table_example():
    text = "CVE-2021-22882 UniFi Protect before v1.17.1 allows an attacker to use spoofed cameras"
    assert strip_cve_tags(text) == "UniFi Protect before v1.17.1 allows an attacker to use spoofed cameras"


def test_strip_no_tag_identity():
    assert strip_cve_tags("Flaws in Wireless Mice and Keyboards") == "Flaws in Wireless Mice and Keyboards"


def test_strip_lowercase_tag():
    assert strip_cve_tags("cve-2020-27539 Heap overflow") == "Heap overflow"


def scan_strip(text):
    """Independent matcher: a left-to-right character scanner."""
    out, i, n = [], 0, len(text)
    while i < n:
        if text[i : i + 4].lower() == "cve-" and text[i + 4 : i + 8].isdigit() and len(text[i + 4 : i + 8]) == 4 \
                and i + 8 < n and text[i + 8] == "-":
            j = i + 9
            while j < n and j - (i + 9) < 7 and text[j].isdigit() and text[j] in "0123456789":
                j += 1
            if j - (i + 9) >= 4:
                out.append(" ")
                i = j
                continue
        out.append(text[i])
        i += 1
    return " ".join("".join(out).split())


def _casings(word):
    for combo in itertools.product(*((c.lower(), c.upper()) for c in word)):
        yield "".join(combo)


def test_strip_exhaustive_positions_and_cases():
    words = ["Heap", "overflow", "in", "camera"]
    tags = [c + "-2020-27539" for c in _casings("cve")] + ["CVE-2014-0160", "CVE-2021-1234567"]
    checked = 0
    for tag in tags:
        for pos in range(len(words) + 1):
            text = " ".join(words[:pos] + [tag] + words[pos:])
            assert strip_cve_tags(text) == scan_strip(text) == " ".join(words)
            checked += 1
    assert checked == len(tags) * 5


def test_strip_leaves_short_ids():
    # three trailing digits is not a tag
    assert strip_cve_tags("CVE-2020-123 x") == scan_strip("CVE-2020-123 x") == "CVE-2020-123 x"


ascii_digits = st.sampled_from("0123456789")
tagish = st.builds(
    lambda c, y, d: f"{c}-{y}-{d}",
    st.sampled_from(list(_casings("cve"))),
    st.text(ascii_digits, min_size=4, max_size=4),
    st.text(ascii_digits, min_size=3, max_size=8),
)
mixed = st.lists(st.one_of(tagish, st.sampled_from(["camera", " ", "  ", "x1", "-", "\t", "CVE", "2020"])), max_size=10).map("".join)


@settings(max_examples=300, deadline=None)
@given(mixed)
def test_strip_matches_scanner(text):
    assert strip_cve_tags(text) == scan_strip(text)


@settings(max_examples=300, deadline=None)
@given(mixed)
def test_strip_idempotent(text):
    once = strip_cve_tags(text)
    assert strip_cve_tags(once) == once


# -- ingest ----------------------------------------------------------------

def test_ingest_dedupes_and_drops_rejected(tmp_path):
    f1 = tmp_path / "nvdcve-1.1-2018.json"
    f2 = tmp_path / "nvdcve-1.1-2019.json.gz"
    f1.write_bytes(feed_bytes(
        nvd_item("CVE-2018-0001", "old text", ["cpe:2.3:a:v:p:*:*:*:*:*:*:*:*"]),
        nvd_item("CVE-2018-0002", "** REJECT ** dup", []),
        nvd_item("CVE-2018-0003", "cam", ["cpe:2.3:h:v:cam:*:*:*:*:*:*:*:*"]),
        nvd_item("CVE-2018-0003", "cam again", ["cpe:2.3:h:v:cam:*:*:*:*:*:*:*:*"]),
    ))
    f2.write_bytes(gzip.compress(feed_bytes(
        nvd_item("CVE-2018-0001", "new text", ["cpe:2.3:h:v:p:*:*:*:*:*:*:*:*"]),
    )))
    report = IngestReport()
    docs = ingest_feeds([f2, f1], report)  # given out of order on purpose
    by_id = {d.doc_id: d for d in docs}
    assert sorted(by_id) == ["CVE-2018-0001", "CVE-2018-0003"]
    assert by_id["CVE-2018-0001"].text == "new text" and by_id["CVE-2018-0001"].label == "related"
    assert by_id["CVE-2018-0003"].text == "cam again"
    assert report.records == 2 and report.related == 2 and report.rejected == 1 and report.duplicates == 2


# -- splits ----------------------------------------------------------------

def make_pool(n_rel, n_unrel):
    docs = [LabeledDoc(f"r{i}", f"CVE-2019-{i:04d} camera text {i}", "related") for i in range(n_rel)]
    docs += [LabeledDoc(f"u{i}", f"CVE-2018-{i:04d} plugin text {i}", "unrelated") for i in range(n_unrel)]
    return docs


def test_paper_split_sizes():
    split = build_balanced_splits(make_pool(9941, 10500), 8924, 4396, seed=42)
    count = lambda docs, lab: sum(d.label == lab for d in docs)
    assert (count(split.train, "related"), count(split.train, "unrelated")) == (4462, 4462)
    assert (count(split.validation, "related"), count(split.validation, "unrelated")) == (2198, 2198)


def test_tiny_split():
    split = build_balanced_splits(make_pool(2, 2), 2, 2, seed=3)
    for part in (split.train, split.validation):
        assert sorted(d.label for d in part) == ["related", "unrelated"]


def test_split_deterministic(tmp_path):
    pool = make_pool(30, 40)
    a = build_balanced_splits(pool, 20, 10, seed=9, variant="no_cve_tag")
    b = build_balanced_splits(pool, 20, 10, seed=9, variant="no_cve_tag")
    write_jsonl(a.train + a.validation, tmp_path / "a.jsonl")
    write_jsonl(b.train + b.validation, tmp_path / "b.jsonl")
    assert (tmp_path / "a.jsonl").read_bytes() == (tmp_path / "b.jsonl").read_bytes()
    assert build_balanced_splits(pool, 20, 10, seed=10).train != build_balanced_splits(pool, 20, 10, seed=9).train


def test_no_cve_tag_variant_strips():
    split = build_balanced_splits(make_pool(10, 10), 8, 8, seed=1, variant="no_cve_tag")
    pat = re.compile(r"CVE-\d{4}-\d{4,7}", re.I)
    assert not any(pat.search(d.text) for d in split.train + split.validation)


def test_capacity_error_names_label():
    with pytest.raises(CapacityError) as err:
        build_balanced_splits(make_pool(3, 50), 4, 4, seed=0)
    assert err.value.label == "related"


def test_odd_sizes_rejected():
    with pytest.raises(ValueError):
        build_balanced_splits(make_pool(10, 10), 3, 4)


def test_split_invariants_checked():
    a = LabeledDoc("a", "x", "related")
    b = LabeledDoc("b", "y", "unrelated")
    with pytest.raises(ValueError):
        DatasetSplit((a, b), (a, b), 0, "cve_tagged")
    with pytest.raises(ValueError):
        DatasetSplit((a,), (), 0, "cve_tagged")


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 20), st.integers(2, 20), st.integers(0, 2**32 - 1), st.data())
def test_split_properties(n_rel, n_unrel, seed, data):
    pool = make_pool(n_rel, n_unrel)
    cap = min(n_rel, n_unrel)
    ht = data.draw(st.integers(0, cap))
    hv = data.draw(st.integers(0, cap - ht))
    split = build_balanced_splits(pool, 2 * ht, 2 * hv, seed)
    assert len(split.train) == 2 * ht and len(split.validation) == 2 * hv
    assert not {d.doc_id for d in split.train} & {d.doc_id for d in split.validation}


def test_jsonl_roundtrip_and_validation(tmp_path):
    docs = [LabeledDoc("a", "camera ünïcode", "related", "tweet"), LabeledDoc("b", "plugin", "unrelated")]
    p = tmp_path / "c.jsonl"
    write_jsonl(docs, p)
    assert read_jsonl(p) == docs
    assert b"\r\n" not in p.read_bytes()
    (tmp_path / "bad.jsonl").write_text('{"doc_id": "x", "text": "t"}\n', encoding="utf-8")
    with pytest.raises(ValueError):
        read_jsonl(tmp_path / "bad.jsonl")


def test_labeled_doc_rejects_blank_text():
    with pytest.raises(ValueError):
        LabeledDoc("x", "   ", "related")
