#!/usr/bin/env python3
"""Writes the synthetic fixture landscapes under data/."""
import math
import random
from pathlib import Path

DATA = Path(__file__).resolve().parent.parent / "data"


def write_grid(path, cells):
    rows, cols = len(cells), len(cells[0])
    lines = [f"rows {rows}", f"cols {cols}"]
    lines += [" ".join(str(c) for c in row) for row in cells]
    path.write_text("\n".join(lines) + "\n")


def mixed(rows, cols, seed, weights):
    rng = random.Random(seed)
    codes = list(weights)
    # patchy fuels: seed a few blobs per code, assign each cell its nearest blob
    blobs = [(rng.uniform(0, rows), rng.uniform(0, cols), rng.choices(codes, weights=list(weights.values()))[0])
             for _ in range(rows * cols // 12)]
    out = []
    for r in range(rows):
        row = []
        for c in range(cols):
            best = min(blobs, key=lambda b: (b[0] - r - 0.5) ** 2 + (b[1] - c - 0.5) ** 2)
            row.append(best[2])
        out.append(row)
    return out


def fixture10():
    cells = mixed(10, 10, 10, {1: 4, 2: 3, 3: 2, 4: 1})
    center = (4, 4)
    disc = {(r, c) for r in range(10) for c in range(10) if math.hypot(r - 4, c - 4) <= 1}
    ring = set()
    for (r, c) in disc:
        for dr in (-1, 0, 1):
            for dc in (-1, 0, 1):
                p = (r + dr, c + dc)
                if p not in disc:
                    ring.add(p)
    gaps = {(2, 4), (4, 6), (6, 4), (4, 2), (5, 5)}
    for (r, c) in ring:
        cells[r][c] = 0 if (r, c) not in gaps else 1
    for (r, c) in disc:
        cells[r][c] = 1
    for (r, c) in gaps:
        cells[r][c] = 2
    return cells, sorted(r * 10 + c for (r, c) in disc), center


def main():
    cells, forbidden, _ = fixture10()
    write_grid(DATA / "fixture10.grid", cells)
    print("fixture10 initial_forbidden =", ",".join(map(str, forbidden)))
    write_grid(DATA / "fixture20.grid", mixed(20, 20, 20, {1: 4, 2: 3, 3: 2, 4: 1, 0: 0.4}))
    write_grid(DATA / "fixture40.grid", mixed(40, 40, 40, {1: 4, 2: 3, 3: 2, 4: 1, 0: 0.4}))


if __name__ == "__main__":
    main()
