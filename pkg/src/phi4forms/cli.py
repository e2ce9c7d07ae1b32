"""Command line interface: ``phi4forms count|reduce|pipeline|verify|forms``."""

from __future__ import annotations

import csv
import io
import json
import sys
from pathlib import Path

import click

from . import acceptance
from .models import ModelError, VarietyModel
from .modforms import (ETA_QUOTIENTS, EtaQuotient, ModFormError, NetworkUnavailable, eta_expand,
                       fetch_newform)
from .pipeline import (ConfigError, FixtureError, FixtureRegistry, PipelineConfig, PipelineError, build_chain,
                       default_cache_path, run_pipeline)
from .pointcount import CountCache, cached_count
from .reduction import verify_chain

FORMATS = click.Choice(["json", "md", "csv"])


class Ctx:
    def __init__(self, threads: int, cache: str | None, fmt: str):
        self.threads = threads
        self.cache_path = Path(cache) if cache else default_cache_path()
        self.fmt = fmt
        self._cache = None

    @property
    def cache(self) -> CountCache:
        if self._cache is None:
            self._cache = CountCache(self.cache_path)
        return self._cache


def parse_primes(text: str) -> list[int]:
    """'5..13' -> odd primes in [5, 13]; '5,7,11' -> those primes."""
    from sympy import isprime, primerange
    try:
        if ".." in text:
            lo, hi = (int(x) for x in text.split(".."))
            primes = list(primerange(lo, hi + 1))
        else:
            primes = [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise click.BadParameter(f"cannot read prime range {text!r}; use A..B or a comma list")
    bad = [p for p in primes if p == 2 or not isprime(p)]
    if bad:
        raise click.BadParameter(f"not odd primes: {bad}")
    if not primes:
        raise click.BadParameter("empty prime range")
    return primes


def _load_model(spec: str) -> VarietyModel:
    path = Path(spec)
    if path.exists():
        try:
            return VarietyModel.from_json(json.loads(path.read_text()))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{spec}: not valid JSON ({exc})") from exc
    reg = FixtureRegistry.default()
    if spec in reg:
        return reg.model(spec)
    raise ConfigError(f"{spec!r} is neither a model file nor a registered fixture")


def _table(rows: list[dict], fmt: str) -> str:
    if fmt == "json":
        return json.dumps(rows, indent=1)
    cols = list(rows[0]) if rows else []
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.DictWriter(buf, cols)
        w.writeheader()
        w.writerows(rows)
        return buf.getvalue()
    lines = ["| " + " | ".join(cols) + " |", "|" + "---|" * len(cols)]
    lines += ["| " + " | ".join(str(r[c]) for c in cols) + " |" for r in rows]
    return "\n".join(lines) + "\n"


def _fail_config(exc: Exception) -> None:
    click.echo(f"error: {exc}", err=True)
    sys.exit(2)


@click.group()
@click.option("--threads", default=1, show_default=True, type=click.IntRange(1, 256), help="worker threads")
@click.option("--cache", type=click.Path(dir_okay=False), default=None,
              help="count cache file (default: $PHI4FORMS_CACHE or ~/.cache/phi4forms/counts.jsonl)")
@click.option("--format", "fmt", type=FORMATS, default="md", show_default=True)
@click.pass_context
def main(ctx: click.Context, threads: int, cache: str | None, fmt: str) -> None:
    """Graph periods, point counts and modular forms."""
    ctx.obj = Ctx(threads, cache, fmt)


@main.command()
@click.argument("model")
@click.option("--primes", required=True, help="A..B or a comma separated list")
@click.pass_obj
def count(obj: Ctx, model: str, primes: str) -> None:
    """Count F_p points of MODEL (a model JSON file or a fixture name)."""
    ps = parse_primes(primes)
    try:
        m = _load_model(model)
    except (ConfigError, ModelError, FixtureError) as exc:
        _fail_config(exc)
    rows = []
    for p in ps:
        if m.invalid_prime(p):
            rows.append({"p": p, "count": "", "cached": "", "hash": m.content_hash()[:16], "note": "bad prime"})
            continue
        n, was = cached_count(m, p, obj.cache, obj.threads)
        rows.append({"p": p, "count": n, "cached": was, "hash": m.content_hash()[:16], "note": ""})
    click.echo(_table(rows, obj.fmt), nl=False)


@main.command()
@click.argument("config")
@click.option("--primes", default="3,5", show_default=True)
@click.option("--budget", default=1e8, show_default=True, type=float, help="points x terms per model")
@click.pass_obj
def reduce(obj: Ctx, config: str, primes: str, budget: float) -> None:
    """Build the reduction chain of CONFIG and check each step."""
    try:
        cfg = PipelineConfig.load(config)
        build = build_chain(cfg)
    except PipelineError as exc:
        _fail_config(exc)
    rep = verify_chain(build.chain, parse_primes(primes), int(budget), obj.cache, obj.threads)
    payload = {**build.chain.to_json(), **rep.to_json(), "assertions": build.assertions}
    if obj.fmt == "json":
        click.echo(json.dumps(payload, indent=1))
    else:
        rows = [c.to_json() for c in rep.checks + rep.composite]
        for c in rows:
            c["lhs"] = "" if c["lhs"] is None else c["lhs"]
            c["rhs"] = "" if c["rhs"] is None else c["rhs"]
        click.echo(_table(rows, obj.fmt), nl=False)
        for a in build.assertions:
            click.echo(f"fixture {a['fixture']}: {'matches' if a['ok'] else 'no match'}")
    ok = rep.ok and all(a["ok"] for a in build.assertions)
    sys.exit(0 if ok else 1)


@main.command()
@click.argument("config")
@click.option("--extended", is_flag=True, help="use the extended prime windows")
@click.option("--offline", is_flag=True, help="ignore eigenvalue tables; check extracted a_p properties")
@click.option("--output", type=click.Path(file_okay=False), default=None,
              help="directory for report.json, report.md and report.csv")
@click.pass_obj
def pipeline(obj: Ctx, config: str, extended: bool, offline: bool, output: str | None) -> None:
    """Run the pipeline CONFIG (a JSON file or a shipped config name)."""
    try:
        cfg = PipelineConfig.load(config)
        rep = run_pipeline(cfg, cache=obj.cache, threads=obj.threads, extended=extended,
                           use_tables=not offline)
    except (ConfigError, FixtureError) as exc:
        _fail_config(exc)
    except PipelineError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    if output:
        out = Path(output)
        out.mkdir(parents=True, exist_ok=True)
        for fmt, ext in (("json", "json"), ("md", "md"), ("csv", "csv")):
            (out / f"report.{ext}").write_text(rep.render(fmt))
    click.echo(rep.render(obj.fmt), nl=False)
    sys.exit(0 if rep.ok else 1)


@main.command()
@click.argument("suite", type=click.Choice(["acceptance-core", "acceptance-extended", "criterion"]))
@click.option("--only", multiple=True, type=int, help="criterion numbers (with SUITE=criterion)")
@click.pass_obj
def verify(obj: Ctx, suite: str, only: tuple[int, ...]) -> None:
    """Run the acceptance criteria and print one line per criterion."""
    if suite == "acceptance-core":
        numbers = acceptance.CORE
    elif suite == "acceptance-extended":
        numbers = acceptance.CORE + (12,)
    else:
        if not only or any(n not in acceptance.CRITERIA for n in only):
            _fail_config(ValueError("give --only with criterion numbers 1..12"))
        numbers = only
    ok = True
    for n in numbers:
        res = acceptance.run_criterion(n, obj.cache)
        click.echo(res.line())
        ok = ok and res.ok
    sys.exit(0 if ok else 1)


@main.group()
def forms() -> None:
    """Eigenvalue sources."""


@forms.command()
@click.argument("label")
@click.option("--dest", type=click.Path(), default="newforms", show_default=True)
@click.option("--endpoint", default="https://www.lmfdb.org", show_default=True)
def fetch(label: str, dest: str, endpoint: str) -> None:
    """Download newform LABEL and store it as a local table."""
    try:
        table = fetch_newform(label, dest, endpoint)
    except NetworkUnavailable as exc:
        click.echo(f"network unavailable: {exc}", err=True)
        sys.exit(1)
    except ModFormError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    click.echo(f"{table.label}: {len(table.ap)} eigenvalues written to {dest}")


def _parse_eta(spec: str) -> EtaQuotient:
    if spec in ETA_QUOTIENTS:
        return ETA_QUOTIENTS[spec]
    try:
        factors = tuple(tuple(int(x) for x in part.split("^")) for part in spec.split())
        return EtaQuotient(factors, spec)
    except (ValueError, ModFormError):
        raise click.BadParameter(f"{spec!r}: use a shipped name ({', '.join(ETA_QUOTIENTS)}) or 'd^e d^e ...'")


@forms.command()
@click.argument("label")
@click.option("--precision", default=50, show_default=True, type=click.IntRange(1, 10 ** 5))
@click.pass_obj
def expand(obj: Ctx, label: str, precision: int) -> None:
    """q-expansion of an eta quotient (a shipped name or factors like '1^3 7^3')."""
    q = _parse_eta(label)
    try:
        series = eta_expand(q, precision)
    except ModFormError as exc:
        _fail_config(exc)
    rows = [{"n": n, "a_n": series[n]} for n in range(1, precision + 1)]
    click.echo(_table(rows, obj.fmt), nl=False)


if __name__ == "__main__":
    main()
