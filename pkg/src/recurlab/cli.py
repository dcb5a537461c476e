"""Command-line experiment driver.

Every subcommand writes ``report.json`` (plus CSV tables where relevant)
into ``--out`` and a separate ``metadata.json`` holding the timestamp, so
reports are byte-identical across runs with the same inputs.  Exit codes:
0 success, 2 parameter error, 3 model error, 4 no certificate,
5 verification failure.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import json
import os
import sys
from pathlib import Path

from recurlab import __version__, kernels
from recurlab.errors import NoCertificateError, ParameterError, RecurlabError, VerificationError

COMMANDS = ("entropy", "rate", "tree-check", "typical-set", "construct-pair", "verify", "dbar", "cover")

DEFAULTS = {
    "seed": 0,
    "n": 8,
    "blocks": 8,
    "retries": 100,
    "epsilon": 0.1,
    "escalations": 1,
    "intervals": 8,
    "length": 8,
    "mode": "exact",
    "max_length": 12,
    "path_length": 1_000_000,
    "radius": 1,
    "n0": 0,
    "window": "closed",
    "out": ".",
}


# ---------------------------------------------------------------------------
# config handling


class Settings:
    """Flags merged over a JSON config; flags win, then config, then defaults."""

    def __init__(self, args: argparse.Namespace, config: dict, base: Path):
        self._args = vars(args)
        self._config = config
        self._base = base

    def get(self, key, default=None):
        value = self._args.get(key)
        if value is not None:
            return value
        if key in self._config:
            return self._config[key]
        if key.replace("_", "-") in self._config:
            return self._config[key.replace("_", "-")]
        return DEFAULTS.get(key, default)

    def path(self, key, required=True) -> Path | None:
        value = self.get(key)
        if value is None:
            if required:
                raise ParameterError(f"missing required input --{key.replace('_', '-')}")
            return None
        # config-relative paths resolve against the config file's directory
        p = Path(value)
        if self._args.get(key) is None and not p.is_absolute():
            p = self._base / p
        if not p.exists():
            raise ParameterError(f"--{key.replace('_', '-')}: file {value} does not exist")
        return p

    def seed(self) -> int:
        if self._args.get("seed") is not None:
            return int(self._args["seed"])
        if "seed" in self._config:
            return int(self._config["seed"])
        env = os.environ.get("RECURLAB_SEED")
        if env not in (None, ""):
            try:
                return int(env)
            except ValueError:
                raise ParameterError(f"RECURLAB_SEED={env!r} is not an integer") from None
        return DEFAULTS["seed"]


def _radii(value) -> list[int]:
    if value is None:
        return []
    if isinstance(value, str):
        value = [v for v in value.replace(",", " ").split() if v]
    radii = [int(v) for v in value]
    if not radii:
        raise ParameterError("--radii needs at least one value")
    return radii


class Output:
    def __init__(self, directory: Path):
        self.dir = directory
        self.dir.mkdir(parents=True, exist_ok=True)

    def rel(self, path: Path) -> str:
        return os.path.relpath(Path(path).resolve(), self.dir.resolve())

    def json(self, name: str, data) -> None:
        (self.dir / name).write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")

    def text(self, name: str, text: str) -> None:
        (self.dir / name).write_text(text)


# ---------------------------------------------------------------------------
# commands


def _model(s: Settings, out: Output):
    from recurlab.process import read_model

    p = s.path("model")
    return read_model(p), out.rel(p)


def cmd_entropy(s: Settings, out: Output) -> dict:
    from recurlab.entropy import entropy
    from recurlab.process import BlockDistribution, block_distribution

    if s.get("dist") is not None:
        p = s.path("dist")
        dist = BlockDistribution.from_json(json.loads(p.read_text()))
        source = {"dist": out.rel(p)}
    else:
        model, rel = _model(s, out)
        ell = int(s.get("length"))
        dist = block_distribution(model, ell, s.get("mode"), seed=s.seed())
        source = {"model": rel, "length": ell}
    value = entropy(dist, normalize=bool(s.get("normalize", False)))
    return {"inputs": source, "entropy": value.to_json(), "support_size": len(dist)}


def cmd_rate(s: Settings, out: Output) -> dict:
    from recurlab.entropy import entropy_rate, rate_ladder

    model, rel = _model(s, out)
    mode = s.get("rate_mode") or s.get("mode")
    report = {"inputs": {"model": rel, "mode": mode}}
    if mode == "exact":
        report["rate"] = entropy_rate(model, "exact").to_json()
    source = "sample" if mode == "empirical" else "auto"
    ladder = rate_ladder(model, int(s.get("max_length")), int(s.get("path_length")), s.seed(), source)
    report["ladder"] = ladder.to_json()
    if mode != "exact":
        report["rate"] = entropy_rate(model, mode, int(s.get("max_length")), int(s.get("path_length")), s.seed()).to_json()
    out.text("ladder.csv", ladder.to_csv())
    return report


def cmd_tree_check(s: Settings, out: Output) -> dict:
    from recurlab.words import admits_full_binary_tree, brute_force_tree_oracle, extract_separated_pair, format_word, parse_word, read_language

    p = s.path("language")
    lang = read_language(p)
    cert = admits_full_binary_tree(lang)
    a = lang.alphabet.size
    report = {
        "inputs": {"language": out.rel(p)},
        "alphabet_size": a,
        "word_length": lang.word_length,
        "size": len(lang),
        "admits": cert is not None,
        "certificate": None if cert is None else cert.to_json(),
    }
    if s.get("oracle"):
        report["oracle"] = brute_force_tree_oracle(lang)
        if report["oracle"] != report["admits"]:
            raise VerificationError("tree admission disagrees with the brute-force oracle")
    if s.get("u") is not None:
        if cert is None:
            raise NoCertificateError("language admits no full binary tree; nothing to extract")
        u = parse_word(s.get("u"), a)
        v = extract_separated_pair(lang, cert, u)
        report["extraction"] = {"u": format_word(u, a), "v": format_word(v, a)}
    return report


def cmd_typical_set(s: Settings, out: Output) -> dict:
    from recurlab.entropy import entropy_rate, typical_set
    from recurlab.process import block_distribution

    model, rel = _model(s, out)
    ell = int(s.get("length"))
    eps = float(s.get("epsilon"))
    dist = block_distribution(model, ell, s.get("mode"), seed=s.seed())
    ts = typical_set(dist, eps)
    report = {"inputs": {"model": rel, "length": ell, "epsilon": eps}, "typical_set": ts.to_json()}
    try:
        report["entropy_rate_bits"] = entropy_rate(model, "exact").bits
    except ParameterError:
        pass
    return report


def cmd_construct_pair(s: Settings, out: Output) -> dict:
    from recurlab.construct import construct_nonrecurrent_pair, rescan_report

    model, rel = _model(s, out)
    report = construct_nonrecurrent_pair(
        model,
        n=int(s.get("n")),
        K=int(s.get("blocks")),
        seed=s.seed(),
        retries=int(s.get("retries")),
        epsilon=float(s.get("epsilon")),
        escalations=int(s.get("escalations")),
        intervals=int(s.get("intervals")),
    )
    out.text("pair.json", report.dumps())
    out.text("summary.txt", report.summary() + "\n")
    ver = report.verification
    out.text("shifts.csv", "k,passed,witness,overlap_length,piece\n" + "".join(
        f"{c.k},{int(c.passed)},{c.witness},{c.overlap_length},{'' if c.piece is None else c.piece + 1}\n" for c in ver.checks
    ))
    rescan = rescan_report(report)
    result = {
        "inputs": {"model": rel},
        "pair": "pair.json",
        "certificate_found": report.certificate_found,
        "verification_passed": ver.passed,
        "rescan": {k: v for k, v in rescan.items() if k != "distances"},
        "parameters": report.parameters,
    }
    if not ver.passed or rescan["min_distance"] is None or rescan["min_distance"] < 1:
        raise VerificationError(f"constructed pair failed verification at shifts {ver.failed_shifts[:20]}")
    return result


def cmd_verify(s: Settings, out: Output) -> dict:
    from recurlab.construct import PairReport, rescan_report, verify_nonrecurrence

    p = s.path("report")
    data = json.loads(p.read_text())
    pair = PairReport.from_json(data)
    bound = s.get("shift_bound")
    ver = verify_nonrecurrence(pair, None if bound is None else int(bound))
    pair.verification = ver
    rescan = rescan_report(pair)
    result = {
        "inputs": {"report": out.rel(p)},
        "verification": ver.to_json(),
        "rescan": {k: v for k, v in rescan.items() if k != "distances"},
    }
    if not (ver.passed and rescan["agree_on_e"] and rescan["differs_on_every_piece"]):
        exc = VerificationError(f"verification failed at shifts {ver.failed_shifts[:20]}")
        exc.diagnostics = result
        raise exc
    return result


def cmd_dbar(s: Settings, out: Output) -> dict:
    from recurlab.process import read_path_any
    from recurlab.tightness import dbar_estimate

    px, py = s.path("x"), s.path("y")
    radii = _radii(s.get("radii"))
    if not radii:
        raise ParameterError("--radii is required")
    est = dbar_estimate(read_path_any(px), read_path_any(py), radii, int(s.get("n0")), s.get("window"))
    out.text("dbar.csv", est.to_csv())
    return {"inputs": {"x": out.rel(px), "y": out.rel(py)}, "dbar": est.to_json()}


def cmd_cover(s: Settings, out: Output) -> dict:
    from recurlab.entropy import typical_set
    from recurlab.process import block_distribution
    from recurlab.tightness import hamming_ball_cover
    from recurlab.words import read_language

    if s.get("language") is not None:
        p = s.path("language")
        words = read_language(p)
        source = {"language": out.rel(p)}
    else:
        model, rel = _model(s, out)
        ell = int(s.get("length"))
        eps = float(s.get("epsilon"))
        words = typical_set(block_distribution(model, ell, s.get("mode"), seed=s.seed()), eps)
        source = {"model": rel, "length": ell, "epsilon": eps}
    radii = _radii(s.get("radii")) or [int(s.get("radius"))]
    covers = [hamming_ball_cover(words, r) for r in radii]
    out.text("cover.csv", covers[-1].to_csv())
    out.text(
        "families.csv",
        "radius,family_count,log2_family_count\n" + "".join(f"{c.radius},{c.family_count},{c.log2_family_count:.12g}\n" for c in covers),
    )
    return {"inputs": source, "input_size": len(words), "covers": [c.to_json() for c in covers]}


HANDLERS = {
    "entropy": cmd_entropy,
    "rate": cmd_rate,
    "tree-check": cmd_tree_check,
    "typical-set": cmd_typical_set,
    "construct-pair": cmd_construct_pair,
    "verify": cmd_verify,
    "dbar": cmd_dbar,
    "cover": cmd_cover,
}


# ---------------------------------------------------------------------------
# parser


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config; command-line flags take precedence")
    p.add_argument("--model", help="process model JSON")
    p.add_argument("--seed", type=int, help="master seed (fallback: RECURLAB_SEED, then 0)")
    p.add_argument("--out", help="output directory (default: current directory)")
    p.add_argument("--epsilon", type=float)
    p.add_argument("--mode", choices=("exact", "empirical"))
    p.add_argument("--length", type=int, help="block length")


# command-specific flags: (flags, argparse keyword arguments)
OPTIONS = {
    "entropy": [
        (("--dist",), dict(help="block law JSON (word -> probability)")),
        (("--normalize",), dict(action="store_true", default=None, help="renormalise a sub-probability law")),
    ],
    "rate": [
        (("--rate-mode",), dict(dest="rate_mode", choices=("exact", "ladder", "empirical"), help="overrides --mode for the rate")),
        (("--max-length",), dict(type=int, dest="max_length")),
        (("--path-length",), dict(type=int, dest="path_length")),
    ],
    "tree-check": [
        (("--language",), {}),
        (("--u",), dict(help="extract a word differing from U at every position")),
        (("--oracle",), dict(action="store_true", default=None, help="cross-check against brute force")),
    ],
    "typical-set": [],
    "construct-pair": [
        (("--n",), dict(type=int)),
        (("--blocks",), dict(type=int, help="K, n-intervals kept on each side")),
        (("--retries",), dict(type=int)),
        (("--escalations",), dict(type=int)),
        (("--intervals",), dict(type=int)),
    ],
    "verify": [
        (("--report",), {}),
        (("--shift-bound",), dict(type=int, dest="shift_bound")),
    ],
    "dbar": [
        (("--x",), {}),
        (("--y",), {}),
        (("--radii",), dict(help="comma-separated radii")),
        (("--n0",), dict(type=int)),
        (("--window",), dict(choices=("closed", "half_open"))),
    ],
    "cover": [
        (("--language",), {}),
        (("--radius",), dict(type=int)),
        (("--radii",), dict(help="comma-separated radii (one cover each)")),
    ],
}

HELP = {
    "entropy": "entropy of a block law",
    "rate": "entropy rate and block-entropy ladder",
    "tree-check": "full-binary-tree admission for a language file",
    "typical-set": "greedy typical set of a block law",
    "construct-pair": "build and verify a non-recurrent pair",
    "verify": "re-verify a stored pair report",
    "dbar": "windowed mean Hamming distance of two paths",
    "cover": "greedy Hamming-ball cover of a typical set or language",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="recurlab", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    for name in COMMANDS:
        p = sub.add_parser(name, help=HELP[name])
        _common(p)
        for flags, kwargs in OPTIONS[name]:
            p.add_argument(*flags, **kwargs)
    # "run" accepts every flag so any of them can override the config
    p = sub.add_parser("run", help="run the experiment named by the config's 'experiment' field")
    _common(p)
    seen = set()
    for name in COMMANDS:
        for flags, kwargs in OPTIONS[name]:
            if flags[0] not in seen:
                seen.add(flags[0])
                p.add_argument(*flags, **{k: v for k, v in kwargs.items() if k != "help"})
    return parser


def _load_config(path) -> tuple[dict, Path]:
    if path is None:
        return {}, Path.cwd()
    p = Path(path)
    if not p.exists():
        raise ParameterError(f"config file {path} does not exist")
    try:
        data = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise ParameterError(f"config file {path} is not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise ParameterError("config must be a JSON object")
    return data, p.parent


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_help()
        return 2
    out = Output(Path(args.out or "."))
    command = args.command
    try:
        config, base = _load_config(args.config)
        if args.out is None and "out" in config:
            out = Output(base / config["out"])
        if command == "run":
            command = config.get("experiment")
            if command not in HANDLERS:
                raise ParameterError(f"config 'experiment' must be one of {', '.join(COMMANDS)}")
        settings = Settings(args, config, base)
        result = HANDLERS[command](settings, out)
        report = {"command": command, "status": "ok", "exit_code": 0, **result}
        code = 0
    except RecurlabError as exc:
        code = exc.exit_code
        report = {
            "command": command,
            "status": "error",
            "exit_code": code,
            "error": type(exc).__name__,
            "message": str(exc),
        }
        if getattr(exc, "diagnostics", None):
            report["diagnostics"] = exc.diagnostics
        print(f"recurlab {command}: {type(exc).__name__}: {exc}", file=sys.stderr)
    out.json("report.json", report)
    out.json(
        "metadata.json",
        {
            "command": command,
            "version": __version__,
            "backend": kernels.BACKEND,
            "finished_at": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
        },
    )
    if code == 0:
        print(f"recurlab {command}: ok, report in {out.dir / 'report.json'}")
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
