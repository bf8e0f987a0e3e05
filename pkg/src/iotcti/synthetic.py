"""Synthetic corpora and NVD feeds for tests, demos and offline experiments."""
from __future__ import annotations

import json

import numpy as np

from .corpus import RELATED, UNRELATED, LabeledDoc

RELATED_TERMS = (
    "camera router firmware thermostat sensor webcam doorbell gateway modem baby monitor "
    "plc controller printer nas dvr smartplug bulb hub zigbee bluetooth"
).split()
UNRELATED_TERMS = (
    "wordpress plugin browser php sql spreadsheet kernel library framework javascript "
    "cms forum ecommerce java python jenkins chrome drupal joomla editor"
).split()
SHARED_TERMS = (
    "remote attacker allows denial service arbitrary code execution crafted request "
    "vulnerability overflow authentication bypass injection"
).split()


def planted_corpus(
    n_docs: int = 400,
    seed: int = 0,
    doc_len: int = 10,
    noise: float = 0.2,
    source: str = "cve",
) -> list[LabeledDoc]:
    """Balanced corpus whose classes use disjoint vocabularies.

    A ``noise`` fraction of every document's words is drawn from a pool shared
    by both classes. Documents alternate related/unrelated.
    """
    rng = np.random.default_rng(seed)
    n_noise = int(round(noise * doc_len))
    docs = []
    for i in range(n_docs):
        related = i % 2 == 0
        own = RELATED_TERMS if related else UNRELATED_TERMS
        words = list(rng.choice(own, doc_len - n_noise)) + list(rng.choice(SHARED_TERMS, n_noise))
        rng.shuffle(words)
        docs.append(LabeledDoc(f"doc-{i:05d}", " ".join(words), RELATED if related else UNRELATED, source))
    return docs


def nvd_item(cve_id: str, description: str, cpes: list[str]) -> dict:
    return {
        "cve": {
            "data_type": "CVE",
            "CVE_data_meta": {"ID": cve_id},
            "description": {"description_data": [{"lang": "en", "value": description}]},
        },
        "configurations": {
            "CVE_data_version": "4.0",
            "nodes": [
                {
                    "operator": "OR",
                    "children": [],
                    "cpe_match": [{"vulnerable": True, "cpe23Uri": c} for c in cpes],
                }
            ],
        },
    }


def nvd_feed(items: list[dict]) -> dict:
    return {
        "CVE_data_type": "CVE",
        "CVE_data_format": "MITRE",
        "CVE_data_version": "4.0",
        "CVE_data_numberOfCVEs": str(len(items)),
        "CVE_Items": items,
    }


def feed_from_docs(docs: list[LabeledDoc], year: int, start: int = 1000, tag: bool = True) -> bytes:
    """Encode docs as an NVD feed; related docs get a hardware CPE.

    With ``tag=True`` each description is prefixed with its CVE id, the way
    many tweets announcing a CVE are written.
    """
    items = []
    for k, d in enumerate(docs):
        cve_id = f"CVE-{year}-{start + k:04d}"
        part = "h" if d.label == RELATED else "a"
        cpe = f"cpe:2.3:{part}:vendor{k % 7}:product{k}:1.0:*:*:*:*:*:*:*"
        text = f"{cve_id} {d.text}" if tag else d.text
        items.append(nvd_item(cve_id, text, [cpe]))
    return json.dumps(nvd_feed(items), sort_keys=True).encode()
