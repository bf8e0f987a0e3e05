"""Tweet text to tokens to TF-IDF rows."""
import math

from iotcti.features import fit_vocabulary, transform, transform_many
from iotcti.textprep import load_stopwords, preprocess

tweets = [
    "Could Blackberry have a real chance in IoT? #IoT",
    "&amp; see https://t.co/xyz attack",
    "Remote attacker can reflash the camera firmware (CVE-2021-22882)",
]
stop = load_stopwords()
print(len(stop), "stopwords")
tokens = [preprocess(t, stop) for t in tweets]
for t in tokens:
    print(t)

vocab = fit_vocabulary(tokens)
print(len(vocab), "terms, fingerprint", vocab.fingerprint[:12])

X = transform_many(tokens, vocab)
print(X.shape, X.nnz, "nonzeros")
print([round(math.sqrt(X[i].multiply(X[i]).sum()), 12) for i in range(X.shape[0])])  # unit rows

fv = transform(["iot", "camera", "unseen"], vocab)
print(fv.entries)
print(vocab.idf("iot"), vocab.idf("camera"))

# raw counts, for the naive Bayes comparisons
print(transform(["iot", "iot", "camera"], vocab, weighting="counts").entries)
