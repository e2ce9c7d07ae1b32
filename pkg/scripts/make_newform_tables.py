"""Regenerate the shipped weight-4 newform tables with PARI/GP (development-time only).

Requires cypari2, which is not a runtime dependency.  For every rational newform
of trivial character at the listed levels, the prime coefficients up to --bound
are written as JSON.  Labels follow the LMFDB convention of ordering Galois
orbits by dimension and then by trace sequence; the mapping is recorded as a claim.
"""

from __future__ import annotations

import argparse
import json
from pathlib import Path

import cypari2

LEVELS = [5, 6, 7, 13, 17, 78, 390]
WEIGHT = 4
OUT = Path(__file__).resolve().parent.parent / "src" / "phi4forms" / "data" / "newforms"


def orbits(pari, N: int, k: int, bound: int) -> list[tuple[int, list[int]]]:
    gp = (f"my(mf=mfinit([{N},{k}],0),L=mfeigenbasis(mf),P=mffields(mf));"
          f"[[poldegree(P[i]), apply(x->if(type(x)==\"t_POLMOD\",trace(x),x)*if(poldegree(P[i])==1,1,1),"
          f" mfcoefs(L[i],{bound}))] | i<-[1..#L]]")
    return [(int(d), [int(c) for c in cs]) for d, cs in pari(gp)]


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--bound", type=int, default=400)
    args = ap.parse_args()
    pari = cypari2.Pari()
    pari.allocatemem(2 * 10 ** 9)
    primes = [int(p) for p in pari(f"primes([2,{args.bound}])")]
    OUT.mkdir(parents=True, exist_ok=True)
    for N in LEVELS:
        ordered = sorted(orbits(pari, N, WEIGHT, args.bound), key=lambda f: (f[0], f[1][1:]))
        for idx, (deg, coefs) in enumerate(ordered):
            if deg != 1:
                continue
            label = f"{N}.{WEIGHT}.a.{chr(ord('a') + idx)}"
            table = {
                "label": label,
                "level": N,
                "weight": WEIGHT,
                "ap": {str(p): str(coefs[p]) for p in primes},
                "provenance": "ingested",
                "source": "PARI/GP mfinit newspace, rational eigenforms",
                "label_claim": "orbit letter assigned by (dimension, trace sequence); not cross-checked online",
            }
            (OUT / f"{label}.json").write_text(json.dumps(table, indent=1) + "\n")
            print(label, [coefs[p] for p in primes[:8]])


if __name__ == "__main__":
    main()
