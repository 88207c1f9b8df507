"""Command line interface.

Subcommands::

    pmf            probability of one draw order under given weights
    sample         permutations from the urn or exponential-clock sampler
    topk           distance diagnostics for the first k draws
    bottom-table   limiting bottom-card probabilities for a weight family
    converge-test  classify whether the reversed order has a limit law
    arrangement    chamber walks: sim / stationary / sample-bd

Weight specs are an inline JSON list (``'[1,2,3]'``), a file path (JSON list
or whitespace-separated numbers), or a named family: ``uniform``,
``sukhatme-asc``, ``sukhatme-desc``, ``zipf`` (vector families, need --n);
``linear``, ``constant``, ``log``, ``log-loglog`` (sequence families for
bottom-table / converge-test).  Numbers print with 9 significant digits.
Every run logs its seed to stderr and writes a ``run_manifest.json`` sidecar
(directory from ``LUCEWALKS_OUTPUT_DIR``, default the working directory).

Exit codes: 0 success, 1 usage error, 2 numerical failure (tolerance not
met), 3 precondition violation.
"""

import argparse
import csv
import json
import math
import os
import sys
import time
import warnings

import numpy as np

from . import __version__, kernels
from .arrangements import (FaceWeightTable, ChamberChain, Permutation, SignVector,
                           brown_diaconis_sample_many, chamber_index,
                           ehrenfest_face_weights, enumerate_chambers,
                           graph_coloring_face_weights, riffle_face_weights,
                           stationary_exact, transition_matrix,
                           tsetlin_face_weights, walk_step)
from .bottomk import SEQUENCE_FAMILIES, convergence_test, limit_bottom_pmf
from .core import (WeightVector, luce_pmf, normalize, sample_exponential_many,
                   sample_urn_many, sukhatme_weights)
from .exceptions import DefectiveMassWarning, LucewalksError, PreconditionError, \
    ToleranceError
from .rng import RngStream
from .topk import distance_report

__all__ = ["main", "read_csv_text", "read_json_text", "read_jsonl_text",
           "resolve_weight_vector", "resolve_weight_sequence"]

VECTOR_FAMILIES = ("uniform", "sukhatme-asc", "sukhatme-desc", "zipf")


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _f9(x):
    """Round a float to 9 significant digits (the CLI output precision)."""
    return float(f"{float(x):.9g}")


def _round9(obj):
    if isinstance(obj, float):
        return _f9(obj)
    if isinstance(obj, dict):
        return {k: _round9(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round9(v) for v in obj]
    return obj


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return f"{v:.9g}"
    return str(v)


def _emit_csv(header, rows):
    writer = csv.writer(sys.stdout, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_cell(v) for v in row])


def _emit_json(obj):
    json.dump(_round9(obj), sys.stdout, separators=(", ", ": "))
    sys.stdout.write("\n")


# ---------------------------------------------------------------------------
# round-trip readers (the tool can re-parse everything it prints)
# ---------------------------------------------------------------------------

def read_csv_text(text):
    """Rows of a CLI CSV output as a list of header-keyed dicts of strings."""
    lines = text.splitlines()
    if not lines:
        return []
    rows = list(csv.reader(lines))
    header = rows[0]
    return [dict(zip(header, r)) for r in rows[1:]]


def read_json_text(text):
    return json.loads(text) if text.strip() else None


def read_jsonl_text(text):
    return [json.loads(line) for line in text.splitlines() if line.strip()]


# ---------------------------------------------------------------------------
# weight specs
# ---------------------------------------------------------------------------

def _vector_from_family(name, args):
    if args.n is None:
        raise PreconditionError(f"weight spec: family {name!r} needs --n")
    n = int(args.n)
    if name == "uniform":
        return WeightVector(np.full(n, 1.0 / n))
    if name == "sukhatme-asc":
        return sukhatme_weights(n, "ascending")
    if name == "sukhatme-desc":
        return sukhatme_weights(n, "descending")
    if name == "zipf":
        s = float(getattr(args, "zipf_s", 1.0) or 1.0)
        return WeightVector(1.0 / np.arange(1, n + 1, dtype=np.float64) ** s)
    raise PreconditionError(f"weight spec: unknown family {name!r}")


def _vector_from_object(obj):
    """The shared JSON-object spec: {"weights": [...]} or {"family": ..., "n": ...}."""
    if not isinstance(obj, dict):
        raise PreconditionError("weight spec: JSON object expected")
    if "weights" in obj:
        return WeightVector(obj["weights"])
    fam = obj.get("family")
    if fam is None:
        raise PreconditionError("weight spec: object needs 'weights' or 'family'")
    if "n" not in obj:
        raise PreconditionError(f"weight spec: family {fam!r} needs 'n'")
    n = int(obj["n"])
    if fam == "uniform":
        return WeightVector(np.full(n, 1.0 / n))
    if fam == "sukhatme":
        return sukhatme_weights(n, obj.get("orientation", "descending"))
    if fam == "zipf":
        s = float(obj.get("s", 1.0))
        return WeightVector(1.0 / np.arange(1, n + 1, dtype=np.float64) ** s)
    raise PreconditionError(f"weight spec: unknown family {fam!r} in object spec")


def resolve_weight_vector(args):
    """--weights as inline JSON, a readable file, or a vector family name.

    Inline JSON is a bare list ``[1,2,3]`` or an object ``{"weights": [...]}``
    / ``{"family": "sukhatme", "n": 5, "orientation": "ascending"}``; files
    hold the same JSON or whitespace-separated numbers.
    """
    spec = getattr(args, "weights", None)
    if spec is None:
        raise PreconditionError("weight spec: --weights is required")
    s = spec.strip()
    if s.startswith("[") or s.startswith("{"):
        try:
            parsed = json.loads(s)
        except json.JSONDecodeError as e:
            raise PreconditionError(f"weight spec: bad inline JSON: {e}") from None
        w = WeightVector(parsed) if isinstance(parsed, list) else _vector_from_object(parsed)
    elif s in VECTOR_FAMILIES:
        w = _vector_from_family(s, args)
    elif os.path.exists(s):
        text = open(s).read().strip()
        try:
            if text.startswith("[") or text.startswith("{"):
                parsed = json.loads(text)
                w = WeightVector(parsed) if isinstance(parsed, list) \
                    else _vector_from_object(parsed)
            else:
                w = WeightVector([float(t) for t in text.split()])
        except (json.JSONDecodeError, ValueError) as e:
            raise PreconditionError(f"weight spec: cannot parse file {s!r}: {e}") from None
    else:
        raise PreconditionError(
            f"weight spec: {s!r} is neither inline JSON, a readable file, "
            f"nor one of {VECTOR_FAMILIES}")
    if getattr(args, "normalize", False):
        w = normalize(w)
    return w


def resolve_weight_sequence(args):
    """--family plus optional --beta as a WeightSequence."""
    fam = getattr(args, "family", None)
    if fam not in SEQUENCE_FAMILIES:
        raise PreconditionError(
            f"weight spec: --family must be one of {tuple(SEQUENCE_FAMILIES)}")
    if fam == "log":
        return SEQUENCE_FAMILIES[fam](float(args.beta))
    return SEQUENCE_FAMILIES[fam]()


def _parse_labels(text, what):
    s = text.strip()
    try:
        vals = json.loads(s) if s.startswith("[") else [int(t) for t in s.split(",")]
        return tuple(int(v) for v in vals)
    except (json.JSONDecodeError, ValueError):
        raise PreconditionError(f"{what}: cannot parse {text!r}") from None


# ---------------------------------------------------------------------------
# subcommands; each returns a dict of tolerances for the manifest
# ---------------------------------------------------------------------------

def _cmd_pmf(args, rng):
    w = resolve_weight_vector(args)
    sigma = _parse_labels(args.sigma, "sigma")
    val = luce_pmf(w, sigma)
    if args.format == "json":
        _emit_json({"pmf": val})
    else:
        _emit_csv(["pmf"], [[val]])
    return {}


def _cmd_sample(args, rng):
    w = resolve_weight_vector(args)
    if args.n_samples < 0:
        raise PreconditionError("--n-samples must be nonnegative")
    if args.n_samples == 0:
        return {}
    if args.method == "urn":
        samples = sample_urn_many(w, args.n_samples, rng)
    else:
        samples = sample_exponential_many(w, args.n_samples, rng)
    if args.format == "json":
        _emit_json({"method": args.method, "n": w.n,
                    "samples": [list(map(int, row)) for row in samples]})
    else:
        _emit_csv([f"p{j}" for j in range(1, w.n + 1)],
                  [list(map(int, row)) for row in samples])
    return {}


def _cmd_topk(args, rng):
    w = resolve_weight_vector(args)
    report = distance_report(w, args.k).to_dict()
    if args.format == "json":
        _emit_json(report)
    else:
        keys = list(report)
        _emit_csv(keys, [[report[k] for k in keys]])
    return {}


def _cmd_bottom_table(args, rng):
    seq = resolve_weight_sequence(args)
    if args.max_label < 1:
        raise PreconditionError("--max-label must be at least 1")
    rows = []
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", DefectiveMassWarning)
        for label in range(1, args.max_label + 1):
            rows.append((label, limit_bottom_pmf(seq, (label,), tol=args.tol)))
    if any(isinstance(c.message, DefectiveMassWarning) for c in caught):
        print("note: limit law is defective; probabilities sum below 1",
              file=sys.stderr)
    if args.format == "json":
        _emit_json({"family": args.family,
                    "rows": [{"label": l, "probability": p} for l, p in rows]})
    else:
        _emit_csv(["label", "probability"], rows)
    return {"tol": args.tol}


def _cmd_converge_test(args, rng):
    seq = resolve_weight_sequence(args)
    report = convergence_test(seq).to_dict()
    if args.format == "json":
        _emit_json(report)
    else:
        keys = list(report)
        _emit_csv(keys, [[report[k] for k in keys]])
    return {}


def _parse_chamber(kind, dim, text):
    if kind == "boolean":
        return SignVector.from_string(text.strip())
    return Permutation(_parse_labels(text, "chamber"))


def _chamber_json(kind, row):
    if kind == "boolean":
        return SignVector(row).to_string()
    return [int(v) for v in row]


def _chamber_cell(kind, row):
    if kind == "boolean":
        return SignVector(row).to_string()
    return ",".join(str(int(v)) for v in row)


def _build_face_table(args):
    model = args.model
    if model == "tsetlin":
        kind = "braid"
        table = tsetlin_face_weights(resolve_weight_vector(args))
    elif model == "riffle":
        kind = "braid"
        if args.dim is None:
            raise PreconditionError("--dim is required for the riffle model")
        table = riffle_face_weights(args.dim)
    elif model == "ehrenfest":
        kind = "boolean"
        if args.dim is None:
            raise PreconditionError("--dim is required for the ehrenfest model")
        table = ehrenfest_face_weights(args.dim)
    elif model == "coloring":
        kind = "boolean"
        if args.graph is None:
            raise PreconditionError("--graph is required for the coloring model")
        edges = _read_edge_list(args.graph)
        table = graph_coloring_face_weights(edges)
    else:
        raise PreconditionError(f"unknown model {model!r}")
    if args.kind is not None and args.kind != kind:
        raise PreconditionError(f"model {model!r} lives on the {kind} arrangement")
    return table


def _read_edge_list(path):
    if not os.path.exists(path):
        raise PreconditionError(f"graph file {path!r} not found")
    edges = []
    for line in open(path):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise PreconditionError(f"graph file: bad line {line!r} (want 'u v')")
        edges.append((int(parts[0]), int(parts[1])))
    return edges


def _cmd_arrangement(args, rng):
    table = _build_face_table(args)
    kind, dim = table.kind, table.dim
    if args.action == "sim":
        if args.steps < 0:
            raise PreconditionError("--steps must be nonnegative")
        start = _parse_chamber(kind, dim, args.start) if args.start else \
            (SignVector([1] * dim) if kind == "boolean" else Permutation.identity(dim))
        chain = ChamberChain(table, start)
        rows = [chain.current]
        for _ in range(args.steps):
            rows.append(walk_step(chain, rng))
        for t, ch in enumerate(rows):
            state = ch.to_string() if kind == "boolean" else list(ch.mapping)
            _emit_json({"step": t, "chamber": state})
        return {}
    if args.action == "stationary":
        k_mat = transition_matrix(table)
        pi = stationary_exact(k_mat, tol=args.tol)
        chambers = enumerate_chambers(kind, dim)
        cells = [ch.to_string() if kind == "boolean" else
                 ",".join(map(str, ch.mapping)) for ch in chambers]
        if args.format == "json":
            _emit_json({"kind": kind, "stationary": [
                {"chamber": c, "probability": p} for c, p in zip(cells, pi)]})
        else:
            _emit_csv(["chamber", "probability"], list(zip(cells, pi)))
        return {"tol": args.tol}
    if args.action == "sample-bd":
        if args.samples < 0:
            raise PreconditionError("--samples must be nonnegative")
        if args.samples == 0:
            return {}
        reference = _parse_chamber(kind, dim, args.reference) if args.reference else None
        out = brown_diaconis_sample_many(table, args.samples, rng, reference)
        if args.format == "json":
            _emit_json({"kind": kind,
                        "samples": [_chamber_json(kind, row) for row in out]})
        else:
            _emit_csv(["chamber"], [[_chamber_cell(kind, row)] for row in out])
        return {}
    raise PreconditionError(f"unknown arrangement action {args.action!r}")


# ---------------------------------------------------------------------------
# parser and dispatch
# ---------------------------------------------------------------------------

def _add_common(p, *, seeded=True):
    p.add_argument("--format", choices=("json", "csv"), default="json",
                   help="output format (default json)")
    p.add_argument("--seed", type=int, default=None,
                   help="rng seed; defaults to a time-derived value (logged)")
    p.add_argument("--threads", type=int, default=1,
                   help="reserved for parallel kernels; recorded in the manifest")


def _add_weight_opts(p):
    p.add_argument("--weights", help="inline JSON list, file path, or family name")
    p.add_argument("--n", type=int, default=None, help="size for family weight specs")
    p.add_argument("--zipf-s", type=float, default=1.0, dest="zipf_s",
                   help="zipf exponent (default 1.0)")
    p.add_argument("--normalize", action="store_true",
                   help="scale the weight vector to sum to 1")


def build_parser():
    parser = _Parser(prog="lucewalks",
                     description="weighted sampling without replacement, "
                                 "top/bottom-of-deck laws, and chamber walks")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("pmf", help="probability of one draw order")
    _add_weight_opts(p)
    p.add_argument("--sigma", required=True, help="draw order, e.g. '3,2,1'")
    _add_common(p)
    p.set_defaults(func=_cmd_pmf)

    p = sub.add_parser("sample", help="sample draw orders")
    _add_weight_opts(p)
    p.add_argument("--n-samples", type=int, required=True)
    p.add_argument("--method", choices=("urn", "exponential"), default="urn")
    _add_common(p)
    p.set_defaults(func=_cmd_sample)

    p = sub.add_parser("topk", help="distance diagnostics for the first k draws")
    _add_weight_opts(p)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--report", action="store_true",
                   help="emit the full distance report (the default and only mode)")
    _add_common(p)
    p.set_defaults(func=_cmd_topk)

    p = sub.add_parser("bottom-table", help="limiting bottom-card probabilities")
    p.add_argument("--family", required=True, help="linear, constant, log, log-loglog")
    p.add_argument("--beta", type=float, default=1.0, help="scale for the log family")
    p.add_argument("--max-label", type=int, required=True)
    p.add_argument("--tol", type=float, default=1e-6)
    _add_common(p)
    p.set_defaults(func=_cmd_bottom_table)

    p = sub.add_parser("converge-test", help="classify the reversed-order limit")
    p.add_argument("--family", required=True)
    p.add_argument("--beta", type=float, default=1.0)
    _add_common(p)
    p.set_defaults(func=_cmd_converge_test)

    p = sub.add_parser("arrangement", help="chamber walks")
    asub = p.add_subparsers(dest="action", required=True)
    for action in ("sim", "stationary", "sample-bd"):
        q = asub.add_parser(action)
        q.add_argument("--kind", choices=("boolean", "braid"), default=None)
        q.add_argument("--model", required=True,
                       choices=("tsetlin", "riffle", "ehrenfest", "coloring"))
        _add_weight_opts(q)
        q.add_argument("--dim", type=int, default=None,
                       help="dimension (riffle n / ehrenfest d)")
        q.add_argument("--graph", help="edge-list file, one 'u v' pair per line")
        if action == "sim":
            q.add_argument("--steps", type=int, required=True)
            q.add_argument("--start", help="start chamber ('+-+' or '2,1,3')")
        elif action == "stationary":
            q.add_argument("--exact", action="store_true",
                           help="exact dense solve (the only implemented mode)")
            q.add_argument("--tol", type=float, default=1e-10)
        else:
            q.add_argument("--samples", type=int, required=True)
            q.add_argument("--reference", help="reference chamber for the urn sampler")
        _add_common(q)
        q.set_defaults(func=_cmd_arrangement)
    return parser


def _resolve_seed(args):
    if getattr(args, "seed", None) is not None:
        return int(args.seed)
    return int(np.random.SeedSequence().entropy % (1 << 64))


def _write_manifest(argv, seed, tolerances, exit_code, t0, threads):
    out_dir = os.environ.get("LUCEWALKS_OUTPUT_DIR", ".")
    try:
        os.makedirs(out_dir, exist_ok=True)
        manifest = {
            "argv": list(argv),
            "seed": seed,
            "version": __version__,
            "backend": kernels.BACKEND,
            "threads": threads,
            "tolerances": tolerances,
            "exit_code": exit_code,
            "duration_s": round(time.time() - t0, 6),
        }
        with open(os.path.join(out_dir, "run_manifest.json"), "w") as fh:
            json.dump(manifest, fh, indent=2)
            fh.write("\n")
    except OSError as e:  # pragma: no cover - depends on filesystem state
        print(f"warning: could not write run manifest: {e}", file=sys.stderr)


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return 1
    except SystemExit as e:  # --help / --version
        return 0 if (e.code or 0) == 0 else 1
    t0 = time.time()
    seed = _resolve_seed(args)
    print(f"seed: {seed}", file=sys.stderr)
    rng = RngStream(seed)
    tolerances = {}
    try:
        tolerances = args.func(args, rng) or {}
        code = 0
    except PreconditionError as e:
        print(f"precondition error: {e}", file=sys.stderr)
        code = 3
    except ToleranceError as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        code = 2
    except LucewalksError as e:
        print(f"error: {e}", file=sys.stderr)
        code = 3
    _write_manifest(argv, seed, tolerances, code, t0, getattr(args, "threads", 1))
    return code


if __name__ == "__main__":
    sys.exit(main())
