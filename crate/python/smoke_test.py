"""Build the extension with cargo, import it and exercise the main API."""

import json
import os
import shutil
import subprocess
import sys
import tempfile

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))


def build():
    subprocess.run(
        ["cargo", "build", "--release", "-p", "capforge-py", "--features", "extension-module"],
        cwd=ROOT,
        check=True,
    )
    lib = os.path.join(ROOT, "target", "release", "libcapforge.so")
    out = tempfile.mkdtemp(prefix="capforge-py-")
    shutil.copy(lib, os.path.join(out, "capforge.so"))
    sys.path.insert(0, out)


def main():
    if os.environ.get("CAPFORGE_SKIP_BUILD") != "1":
        build()
    import capforge

    print("capforge", capforge.__version__, "format", capforge.FORMAT_VERSION)

    articles = "\n".join(
        json.dumps({"article_id": f"a{i}", "body": f"Report {i}: Angela Merkel met officials in Paris on Tuesday."})
        for i in range(20)
    )
    captions = "\n".join(
        json.dumps({
            "record_id": f"r{i}",
            "image_id": f"i{i}",
            "image_uri": f"img/{i}.jpg",
            "article_id": f"a{i}",
            "caption": f"Angela Merkel greets supporters in Paris during visit {i}",
        })
        for i in range(20)
    )
    corpus = capforge.Corpus.from_jsonl(articles, captions).clean().split(7)
    print("records", len(corpus), "splits", corpus.split_counts())

    gaz = capforge.Gazetteer("Angela Merkel\tPERSON\nParis\tGPE\n")
    tags = gaz.tag_corpus(corpus)
    instances, skips = capforge.gen_entailment(corpus, tags, seed=7, splits=["train", "val", "test"])
    labels = {}
    for inst in instances:
        labels[inst["label"]] = labels.get(inst["label"], 0) + 1
    print("instances", labels, "skips", len(skips))

    renderer = capforge.Renderer()
    rec = renderer.render_entailment(instances[0])
    assert rec["target"] in ("Yes", "No")

    cands = [r["caption"] for r in corpus.records()]
    refs = [[c] for c in cands]
    report = capforge.evaluate(cands, refs)
    assert abs(report["bleu4"] - 1.0) < 1e-12
    print("bleu4", report["bleu4"], "cider_d", capforge.cider_d(cands, refs))

    store = capforge.AnnotationStore()
    first = corpus.records()[0]
    store.create_tasks([{
        "source_id": first["record_id"],
        "image_uri": first["image_uri"],
        "caption": "Supporters marched peacefully",
        "context": "context",
    }])
    tid = first["record_id"]
    store.claim(tid, "annotator")
    store.submit_edit(tid, "annotator", 19, 29, "violently")
    try:
        store.verify(tid, "annotator")
        raise SystemExit("self-verification should fail")
    except capforge.AnnotationError as err:
        print("rejected self-verify:", err.args[0])
    store.verify(tid, "verifier")
    exported = store.export(pair_positives=True)
    assert [e["caption"] for e in exported] == ["Supporters marched peacefully", "Supporters marched violently"]
    print("smoke test ok")


if __name__ == "__main__":
    main()
