import argparse
from pathlib import Path

TRIPLES = [(0.9, 0.5, 1.0), (0.8, 0.7, 2.0), (0.75, 0.9, 1.5)]


def parser(doc: str, **defaults) -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(description=doc)
    p.add_argument("--seed", type=int, default=defaults.get("seed", 2026))
    p.add_argument("--n", type=int, default=defaults.get("n", 10_000))
    p.add_argument("--outdir", type=Path, default=Path("results"))
    return p
