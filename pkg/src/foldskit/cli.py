"""The ``foldskit`` command line.

Every subcommand produces a result payload that is printed either as text or
as a JSON envelope ``{schema_version, status, command, result, diagnostics}``.
Exit codes: 0 success or a true verdict, 1 a false verdict, 2 an input error,
3 an exhausted search budget.
"""

from __future__ import annotations

import argparse
import json
import random
import sys
from pathlib import Path
from typing import Any, Callable, Sequence

from . import catalog
from .derivation import BottomFamily, derive_signature
from .dsl import detect_kind, header_names, parse_signature, parse_structure, parse_theory, sanitize_names, serialize
from .dsl.serialize import serialize_signature
from .errors import BudgetExhausted, Diagnostic, FoldsError, ParseError
from .indiscernibility import (
    count_indiscernibilities_at,
    default_budget,
    indiscernibilities_at,
    univalence_report,
)
from .logic import Theory, check_theory
from .morphisms import enumerate_morphisms, hsip_check, is_equivalence, is_iso, is_sse
from .signature import Signature, validate_signature
from .structure import Structure

SCHEMA_VERSION = 1

EXIT_OK, EXIT_FALSE, EXIT_INPUT, EXIT_BUDGET = 0, 1, 2, 3

ENVELOPE_SCHEMA: dict = {
    "type": "object",
    "required": ["schema_version", "status", "command", "result", "diagnostics"],
    "additionalProperties": False,
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "status": {"enum": ["ok", "error", "budget-exhausted"]},
        "command": {
            "type": "object",
            "required": ["name", "argv"],
            "properties": {"name": {"type": "string"}, "argv": {"type": "array", "items": {"type": "string"}}},
        },
        "result": {"type": ["object", "null"]},
        "diagnostics": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["message"],
                "properties": {
                    "message": {"type": "string"},
                    "file": {"type": ["string", "null"]},
                    "line": {"type": "integer", "minimum": 1},
                    "column": {"type": "integer", "minimum": 1},
                    "length": {"type": "integer", "minimum": 1},
                },
            },
        },
    },
}


class InputError(Exception):
    def __init__(self, message: str, diagnostics: list[Diagnostic] | None = None):
        super().__init__(message)
        self.diagnostics = diagnostics or [Diagnostic(message)]


class Outcome:
    """What a subcommand hands back to the dispatcher."""

    def __init__(self, result: dict, text: str, code: int = EXIT_OK, diagnostics: list[Diagnostic] | None = None):
        self.result = result
        self.text = text
        self.code = code
        self.diagnostics = diagnostics or []


# -- loading ----------------------------------------------------------------


class Loader:
    """Resolves file paths and builtin names for one invocation.

    Signature names are looked up in ``--lib`` files first, then in ``.fsig``
    files next to the file being parsed, then among the builtins.
    """

    def __init__(self, lib: Sequence[str]):
        self.lib: dict[str, Signature] = {}
        for p in lib:
            sig = self._parse_file(Path(p), "signature")
            self.lib[sig.name] = sig
            self.lib.setdefault(Path(p).stem, sig)

    def _read(self, path: Path) -> str:
        try:
            return path.read_text(encoding="utf-8")
        except OSError as exc:
            raise InputError(f"cannot read {path}: {exc.strerror or exc}") from None

    def _parse_file(self, path: Path, expected: str | None = None):
        text = self._read(path)
        kind = detect_kind(text)
        if expected is not None and kind != expected:
            raise InputError(f"{path}: expected a {expected} file, found {kind or 'unrecognized input'}")
        resolve = self.resolver(path.parent)
        try:
            if kind == "signature":
                return parse_signature(text, file=str(path))
            if kind == "structure":
                return parse_structure(text, resolve, file=str(path))
            if kind == "theory":
                return parse_theory(text, resolve, file=str(path))
        except ParseError as exc:
            raise InputError(f"{path}: invalid {kind}", exc.diagnostics) from None
        raise InputError(f"{path}: not a signature, structure or theory file")

    def resolver(self, folder: Path | None) -> Callable[[str], Signature]:
        def resolve(name: str) -> Signature:
            if name in self.lib:
                return self.lib[name]
            if folder is not None and folder.is_dir():
                for p in sorted(folder.glob("*.fsig")):
                    try:
                        text = p.read_text(encoding="utf-8")
                    except OSError:
                        continue
                    declared, _ = header_names(text)
                    if name in (declared, p.stem):
                        sig = parse_signature(text, file=str(p))
                        self.lib[name] = sig
                        return sig
            return catalog.builtin_signature(name)

        return resolve

    def load(self, ref: str, kind: str):
        """A file path, or else the name of a builtin of the given kind."""
        path = Path(ref)
        if path.is_file():
            return self._parse_file(path, kind)
        getter = {
            "signature": catalog.builtin_signature,
            "structure": catalog.builtin_structure,
            "theory": catalog.builtin_theory,
        }[kind]
        try:
            return getter(ref)
        except KeyError:
            raise InputError(f"{ref}: no such file and no builtin {kind} of that name") from None


# -- helpers ------------------------------------------------------------------


def _text(x: Any) -> str:
    return str(x)


def parse_family(spec: str, sig: Signature) -> BottomFamily:
    """``"O={a,b};X={}"`` -> a bottom family.  Missing sorts get no elements."""
    items: dict = {K: () for K in sig.bottom_sorts()}
    for part in filter(None, (p.strip() for p in spec.split(";"))):
        if "=" not in part:
            raise InputError(f"bad family entry {part!r}; expected SORT={{elem,...}}")
        K, rhs = (s.strip() for s in part.split("=", 1))
        if K not in items:
            raise InputError(f"{K} is not a rank-0 sort of {sig.name}")
        rhs = rhs.strip()
        if not (rhs.startswith("{") and rhs.endswith("}")):
            raise InputError(f"bad family entry {part!r}; expected braces around the elements")
        elems = tuple(e.strip() for e in rhs[1:-1].split(",") if e.strip())
        if len(set(elems)) != len(elems):
            raise InputError(f"repeated element in family entry for {K}")
        items[K] = elems
    return BottomFamily(items)


def split_pair(M: Structure, K: str, spec: str) -> tuple:
    """Split ``a,b`` at the unique comma that yields two elements of ``K``.

    Element names may themselves contain commas (``t(f,g)``), so every split
    position is tried.
    """
    if not M.signature.has_sort(K):
        raise InputError(f"unknown sort {K}")
    names = {str(e): e for e in M.carriers[K]}
    options = []
    for i, ch in enumerate(spec):
        if ch == ",":
            a, b = spec[:i].strip(), spec[i + 1 :].strip()
            if a in names and b in names:
                options.append((names[a], names[b]))
    if len(options) == 1:
        return options[0]
    if not options:
        raise InputError(f"--pair {spec!r} does not name two elements of {K}")
    raise InputError(f"--pair {spec!r} is ambiguous")


def _morphism_dict(f) -> dict:
    return {str(K): {_text(x): _text(y) for x, y in m.items()} for K, m in f.maps.items()}


# -- subcommands --------------------------------------------------------------


def cmd_validate(args, loader: Loader) -> Outcome:
    files = []
    diags: list[Diagnostic] = []
    for ref in args.files:
        path = Path(ref)
        if not path.is_file():
            raise InputError(f"cannot read {ref}: no such file")
        entry: dict = {"file": ref, "kind": detect_kind(path.read_text(encoding="utf-8")), "valid": True, "issues": []}
        try:
            asset = loader._parse_file(path)
            if isinstance(asset, Signature):
                report = validate_signature(asset)
                entry["issues"] = [str(i) for i in report]
                entry["valid"] = report.ok
            entry["name"] = asset.name
        except InputError as exc:
            entry["valid"] = False
            entry["issues"] = [d.message for d in exc.diagnostics]
            diags.extend(exc.diagnostics)
        files.append(entry)
    ok = all(f["valid"] for f in files)
    lines = []
    for f in files:
        lines.append(f"{f['file']}: {'valid' if f['valid'] else 'invalid'}")
        lines.extend(f"  {i}" for i in f["issues"])
    return Outcome({"valid": ok, "files": files}, "\n".join(lines), EXIT_OK if ok else EXIT_FALSE, diags)


def cmd_derive(args, loader: Loader) -> Outcome:
    sig = loader.load(args.signature, "signature")
    fam = parse_family(args.family or "", sig)
    D = derive_signature(sig, fam)
    names = sanitize_names(s.id for s in D.sorts)
    sorts = [
        {
            "id": str(s.id),
            "name": names[s.id],
            "rank": s.rank,
            "generators": [{"label": g.label, "target": str(g.target)} for g in s.generators],
        }
        for s in D.sorts
    ]
    equations = [
        {"sort": str(e.source), "lhs": ".".join(e.lhs), "rhs": ".".join(e.rhs)} for e in D.equations
    ]
    result = {"signature": sig.name, "family": fam.describe(), "height": D.height, "sorts": sorts, "equations": equations}
    if args.out:
        text = serialize_signature(D, names)
        Path(args.out).write_text(text, encoding="utf-8")
        result["out"] = args.out
    lines = [f"derived signature of {sig.name} over {fam.describe()}: {len(sorts)} sorts, height {D.height}"]
    for s in D.sorts:
        gens = ", ".join(f"{g.label}: {g.target}" for g in s.generators)
        lines.append(f"  {s.id} rank {s.rank}" + (f" {{ {gens} }}" if gens else ""))
    for e in D.equations:
        lines.append(f"  eq {e.source}: {'.'.join(e.lhs)} = {'.'.join(e.rhs)}")
    return Outcome(result, "\n".join(lines))


def cmd_indisc(args, loader: Loader) -> Outcome:
    M = loader.load(args.structure, "structure")
    a, b = split_pair(M, args.sort, args.pair)
    if args.list:
        found = indiscernibilities_at(M, args.sort, a, b, budget=args.budget)
        count = len(found)
    else:
        found = []
        count = count_indiscernibilities_at(M, args.sort, a, b, budget=args.budget)
    result: dict = {"sort": args.sort, "pair": [_text(a), _text(b)], "count": count, "indiscernible": count > 0}
    lines = [f"{a} ⋍ {b} at {args.sort}: {count}"]
    if args.list:
        result["indiscernibilities"] = [phi.describe() for phi in found]
        for i, phi in enumerate(found):
            lines.append(f"  #{i}")
            for S, m in phi.describe().items():
                moved = ", ".join(f"{x}->{y}" for x, y in m.items())
                lines.append(f"    {S}: {moved}")
    return Outcome(result, "\n".join(lines), EXIT_OK if count else EXIT_FALSE)


def cmd_univalence(args, loader: Loader) -> Outcome:
    M = loader.load(args.structure, "structure")
    report = univalence_report(M, budget=args.budget, per_sort=args.per_sort)

    def failure(f) -> dict:
        return {"sort": str(f.sort), "pair": [_text(f.a), _text(f.b)], "count": f.count}

    levels = [
        {"level": lv.level, "sorts": [str(s) for s in lv.sorts], "failures": [failure(f) for f in lv.failures]}
        for lv in report.levels
    ]
    first = report.first_failure
    result = {"univalent": report.univalent, "first_failure": failure(first) if first else None, "levels": levels}
    lines = [f"univalent: {'true' if report.univalent else 'false'}"]
    for lv in report.levels:
        for f in lv.failures:
            lines.append(f"  level {lv.level}: {f.describe()}")
    return Outcome(result, "\n".join(lines), EXIT_OK if report.univalent else EXIT_FALSE)


def cmd_check(args, loader: Loader) -> Outcome:
    M = loader.load(args.structure, "structure")
    T: Theory = loader.load(args.theory, "theory")
    if M.signature != T.signature:
        raise InputError(f"structure is over {M.signature.name} but the theory is over {T.signature.name}")
    report = check_theory(M, T)
    axioms = [
        {
            "name": r.name,
            "holds": r.holds,
            "countermodel": None if r.countermodel is None else {k: _text(v) for k, v in r.countermodel.items()},
        }
        for r in report.results
    ]
    lines = [f"{T.name} on {M.name}: {'holds' if report.ok else 'fails'}"]
    for r in report.results:
        line = f"  {r.name}: {'ok' if r.holds else 'FAILS'}"
        if not r.holds and r.countermodel:
            line += " at " + ", ".join(f"{k}={v}" for k, v in r.countermodel.items())
        lines.append(line)
    return Outcome({"theory": T.name, "holds": report.ok, "axioms": axioms}, "\n".join(lines), EXIT_OK if report.ok else EXIT_FALSE)


def cmd_hom(args, loader: Loader) -> Outcome:
    M = loader.load(args.source, "structure")
    N = loader.load(args.target, "structure")
    if M.signature != N.signature:
        raise InputError("the two structures are over different signatures")
    kind = args.kind or "all"
    tests = {"iso": is_iso, "sse": is_sse, "equiv": lambda f: is_equivalence(f, budget=args.budget), "all": lambda f: True}
    keep = tests[kind]
    found = [f for f in enumerate_morphisms(M, N, budget=args.budget) if keep(f)]
    result = {"kind": kind, "count": len(found), "morphisms": [_morphism_dict(f) for f in found]}
    lines = [f"{kind} morphisms {M.name} -> {N.name}: {len(found)}"]
    for i, f in enumerate(found):
        parts = "; ".join(f"{K}: " + ", ".join(f"{x}->{y}" for x, y in m.items()) for K, m in _morphism_dict(f).items() if m)
        lines.append(f"  #{i} {parts}")
    return Outcome(result, "\n".join(lines), EXIT_OK if found else EXIT_FALSE)


def cmd_hsip(args, loader: Loader) -> Outcome:
    M = loader.load(args.source, "structure")
    N = loader.load(args.target, "structure")
    if M.signature != N.signature:
        raise InputError("the two structures are over different signatures")
    report = hsip_check(M, N, budget=args.budget)
    verdict = report.applicable and report.ok
    d = report.as_dict()
    d["holds"] = verdict
    lines = [f"hsip {M.name} -> {N.name}: {'holds' if verdict else ('not applicable' if not report.applicable else 'VIOLATED')}"]
    if report.reason:
        lines.append(f"  {report.reason}")
    if report.applicable:
        lines.append(
            f"  morphisms {report.morphisms}, sse {report.sse}, isos {report.isos}, equivalences {report.equivalences}"
        )
    lines.extend(f"  {c}" for c in report.counterexamples)
    return Outcome(d, "\n".join(lines), EXIT_OK if verdict else EXIT_FALSE)


def cmd_builtin(args, loader: Loader) -> Outcome:
    if args.dump:
        try:
            path = catalog.builtin_path(args.dump)
            asset = catalog.builtin(args.dump)
        except KeyError:
            raise InputError(f"no builtin named {args.dump}") from None
        text = serialize(asset)
        return Outcome({"name": args.dump, "file": path.name, "text": text}, text.rstrip("\n"))
    listing = catalog.list_builtins()
    lines = []
    for kind, names in listing.items():
        lines.append(f"{kind}:")
        lines.extend(f"  {n}" for n in names)
    return Outcome({"builtins": listing}, "\n".join(lines))


COMMANDS = {
    "validate": cmd_validate,
    "derive": cmd_derive,
    "indisc": cmd_indisc,
    "univalence": cmd_univalence,
    "check": cmd_check,
    "hom": cmd_hom,
    "hsip": cmd_hsip,
    "builtin": cmd_builtin,
}


# -- argument parsing -------------------------------------------------------


class _ArgumentParser(argparse.ArgumentParser):
    def error(self, message: str):
        raise InputError(f"{self.prog}: {message}")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=["text", "json"], default=argparse.SUPPRESS)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="seed for randomized utilities")
    common.add_argument("--budget", type=int, default=argparse.SUPPRESS, help="search node budget")
    common.add_argument("--lib", action="append", default=argparse.SUPPRESS, help="extra .fsig file (repeatable)")

    p = _ArgumentParser(prog="foldskit", description="Finite FOLDS signatures and structures.", parents=[common])
    sub = p.add_subparsers(dest="command", parser_class=_ArgumentParser)

    s = sub.add_parser("validate", parents=[common], help="parse and validate files")
    s.add_argument("files", nargs="+")

    s = sub.add_parser("derive", parents=[common], help="derived signature over a bottom family")
    s.add_argument("signature")
    s.add_argument("--family", default="", help='e.g. "O={a,b}"')
    s.add_argument("--out")

    s = sub.add_parser("indisc", parents=[common], help="count or list indiscernibilities")
    s.add_argument("structure")
    s.add_argument("--sort", required=True)
    s.add_argument("--pair", required=True, help="a,b")
    s.add_argument("--list", action="store_true")

    s = sub.add_parser("univalence", parents=[common], help="decide univalence")
    s.add_argument("structure")
    s.add_argument("--per-sort", action="store_true")

    s = sub.add_parser("check", parents=[common], help="evaluate a theory")
    s.add_argument("structure")
    s.add_argument("--theory", required=True)

    s = sub.add_parser("hom", parents=[common], help="enumerate structure morphisms")
    s.add_argument("source")
    s.add_argument("target")
    g = s.add_mutually_exclusive_group()
    for flag in ("iso", "sse", "equiv", "all"):
        g.add_argument(f"--{flag}", dest="kind", action="store_const", const=flag)

    s = sub.add_parser("hsip", parents=[common], help="check the structure identity principle")
    s.add_argument("source")
    s.add_argument("target")

    s = sub.add_parser("builtin", parents=[common], help="list or print shipped assets")
    g = s.add_mutually_exclusive_group(required=True)
    g.add_argument("--list", action="store_true")
    g.add_argument("--dump", metavar="NAME")
    return p


# -- dispatch -----------------------------------------------------------------


def _diag_dict(d: Diagnostic) -> dict:
    out: dict = {"message": d.message}
    if d.span is not None:
        out.update(file=d.span.file, line=d.span.line, column=d.span.column, length=max(1, d.span.length))
    return out


def _emit(fmt: str, name: str, argv: list, status: str, outcome: Outcome | None, diags: list, stdout, stderr) -> None:
    if fmt == "json":
        envelope = {
            "schema_version": SCHEMA_VERSION,
            "status": status,
            "command": {"name": name, "argv": list(argv)},
            "result": outcome.result if outcome else None,
            "diagnostics": [_diag_dict(d) for d in diags],
        }
        stdout.write(json.dumps(envelope, indent=2, ensure_ascii=False) + "\n")
        return
    if outcome is not None and outcome.text:
        stdout.write(outcome.text + "\n")
    for d in diags:
        stderr.write(f"error: {d}\n")


def main(argv: Sequence[str] | None = None, stdout=None, stderr=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    fmt = "json" if _wants_json(argv) else "text"
    name = ""
    try:
        args = build_parser().parse_args(argv)
        name = args.command or ""
        fmt = getattr(args, "format", fmt)
        if not args.command:
            raise InputError("missing subcommand; see foldskit --help")
        random.seed(getattr(args, "seed", 0))
        args.budget = getattr(args, "budget", None) or default_budget()
        loader = Loader(getattr(args, "lib", []))
        outcome = COMMANDS[args.command](args, loader)
    except InputError as exc:
        _emit(fmt, name, argv, "error", None, exc.diagnostics, stdout, stderr)
        return EXIT_INPUT
    except BudgetExhausted as exc:
        _emit(fmt, name, argv, "budget-exhausted", None, [Diagnostic(str(exc))], stdout, stderr)
        return EXIT_BUDGET
    except ParseError as exc:
        _emit(fmt, name, argv, "error", None, exc.diagnostics, stdout, stderr)
        return EXIT_INPUT
    except (FoldsError, KeyError, ValueError) as exc:
        message = exc.args[0] if isinstance(exc, KeyError) and exc.args else str(exc)
        _emit(fmt, name, argv, "error", None, [Diagnostic(str(message))], stdout, stderr)
        return EXIT_INPUT
    _emit(fmt, name, argv, "ok", outcome, outcome.diagnostics, stdout, stderr)
    return outcome.code


def _wants_json(argv: list) -> bool:
    for i, a in enumerate(argv):
        if a == "--format=json" or (a == "--format" and i + 1 < len(argv) and argv[i + 1] == "json"):
            return True
    return False


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
