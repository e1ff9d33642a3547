#!/usr/bin/env python3
"""Download the citation graphs into data/<name>/ in content/cites layout.

Cora and Citeseer ship in that layout already. PubMed ships as tab files
with sparse "word=value" attributes and is rewritten into dense rows.
"""

import argparse
import io
import pathlib
import sys
import tarfile
import urllib.request

BASE = "https://linqs-data.soe.ucsc.edu/public/lbc/"
ARCHIVES = {
    "cora": "cora.tgz",
    "citeseer": "citeseer.tgz",
    "pubmed": "Pubmed-Diabetes.tgz",
}


def fetch(url):
    with urllib.request.urlopen(url) as resp:
        return tarfile.open(fileobj=io.BytesIO(resp.read()), mode="r:gz")


def member(tar, suffix):
    for m in tar.getmembers():
        if m.isfile() and m.name.endswith(suffix):
            return tar.extractfile(m).read().decode("utf-8")
    raise SystemExit(f"archive has no member ending in {suffix}")


def copy_citation(tar, name, out):
    (out / f"{name}.content").write_text(member(tar, f"{name}.content"))
    (out / f"{name}.cites").write_text(member(tar, f"{name}.cites"))


def convert_pubmed(tar, out):
    lines = member(tar, "NODE.paper.tab").splitlines()
    # Line 2 lists the attribute names after the label column.
    words = [f.split(":")[1] for f in lines[1].split("\t")[1:] if f.startswith("numeric:")]
    column = {w: i for i, w in enumerate(words)}
    with open(out / "pubmed.content", "w") as content:
        for line in lines[2:]:
            fields = line.strip().split("\t")
            if len(fields) < 2:
                continue
            row = ["0"] * len(words)
            label = None
            for f in fields[1:]:
                key, _, value = f.partition("=")
                if key == "label":
                    label = value
                elif key in column:
                    row[column[key]] = value
            content.write(" ".join([fields[0], *row, label]) + "\n")

    with open(out / "pubmed.cites", "w") as cites:
        for line in member(tar, "DIRECTED.cites.tab").splitlines()[2:]:
            fields = line.strip().split("\t")
            if len(fields) == 4:
                cites.write(f"{fields[1].split(':')[1]} {fields[3].split(':')[1]}\n")


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("names", nargs="*", default=list(ARCHIVES), choices=list(ARCHIVES))
    ap.add_argument("--data-dir", default="data", type=pathlib.Path)
    args = ap.parse_args()
    for name in args.names:
        out = args.data_dir / name
        out.mkdir(parents=True, exist_ok=True)
        print(f"{name}: {BASE}{ARCHIVES[name]}", file=sys.stderr)
        tar = fetch(BASE + ARCHIVES[name])
        if name == "pubmed":
            convert_pubmed(tar, out)
        else:
            copy_citation(tar, name, out)
        print(f"{name}: wrote {out}", file=sys.stderr)


if __name__ == "__main__":
    main()
