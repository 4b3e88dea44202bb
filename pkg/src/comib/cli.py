"""Command line front end.

One subcommand per solver / bound / oracle, sweep drivers that write
figure-ready CSV (and a rendered PNG next to it), JSON I/O for
distributions, and a flat key=value comib.toml for defaults. All numeric
output uses a canonical 17-significant-digit format so repeated runs are
byte identical. Exit codes: 0 ok, 2 usage, 3 domain or regime error,
4 non-convergence (the result file is still written, with the flag set).

Scalar entropies and rates honor --log-base; diagnostics stay in bits.
Schemas are documented in docs/formats.md.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from .ba_iterators import comib_modulo_solve
from .closed_form import (
    GaussianScalarSpec,
    GaussianVectorSpec,
    KldGaussianSpec,
    SpectrumSpec,
    binary_compound_rate,
    continuous_compound_rate,
    continuous_ib_rate,
    kld_gaussian_rate,
    scalar_gaussian_rate,
    vector_gaussian_rate,
)
from .errors import CalibrationError, DomainError
from .modulo_saddle import ModuloSpec, high_snr_rate, low_snr_saddle, modulo_bounds
from .oracle import binary_compound_oracle, modulo_value_oracle, tito_experiments
from .simplex_core import Channel, Pmf, canonical_float, circulant_from_pmf
from .tv_bounds import (
    TvSpec,
    dobrushin_theta,
    entropy_continuity_omega,
    max_entropy_tv_ball,
    min_entropy_tv_ball_uniform,
    tv_compound_bounds,
)
from .units import scale_from_bits, set_log_base

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DOMAIN = 3
EXIT_NOCONV = 4


def render_json(obj) -> str:
    """Canonical JSON: floats via canonical_float, keys in insertion order."""
    if isinstance(obj, dict):
        return "{" + ", ".join(f'"{k}": {render_json(v)}' for k, v in obj.items()) + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        return "[" + ", ".join(render_json(v) for v in obj) + "]"
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    x = float(obj)
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    return canonical_float(x)


def render_csv(header, rows) -> str:
    def cell(x):
        if isinstance(x, str):
            return x
        if isinstance(x, (int, np.integer)):
            return str(int(x))
        return canonical_float(float(x))

    lines = [",".join(header)]
    lines.extend(",".join(cell(x) for x in row) for row in rows)
    return "\n".join(lines) + "\n"


def emit(text: str, output: str | None) -> None:
    if output:
        with open(output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def load_pmf(path: str) -> Pmf:
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    if text.lstrip().startswith("["):
        return Pmf.from_json(text)
    return Pmf.from_csv(text)


def load_channel(path: str) -> Channel:
    with open(path, "r", encoding="utf-8") as fh:
        mat = json.load(fh)
    return Channel(np.asarray(mat, dtype=float))


def parse_range(text: str) -> np.ndarray:
    """start:step:stop inclusive of stop within 1e-12; a bare number is a
    single-point range."""
    parts = text.split(":")
    if len(parts) == 1:
        return np.array([float(parts[0])])
    if len(parts) != 3:
        raise DomainError(f"range must be start:step:stop, got {text!r}")
    start, step, stop = (float(p) for p in parts)
    if step <= 0.0:
        raise DomainError(f"range step must be positive, got {step!r}")
    count = int(math.floor((stop - start) / step + 1e-12)) + 1
    if count < 1:
        raise DomainError(f"empty range {text!r}")
    return start + step * np.arange(count)


def parse_bands(text: str):
    # "width:snr,width:snr,..."
    bands = []
    for part in text.split(","):
        w, _, s = part.partition(":")
        bands.append((float(w), float(s)))
    return bands


def render_figure(csv_path: str, x, series: dict, xlabel: str, title: str) -> str:
    """PNG next to the CSV, same stem. Returns the figure path."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig_path = os.path.splitext(csv_path)[0] + ".png"
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for label, ys in series.items():
        ys = np.asarray(ys, dtype=float)
        mask = np.isfinite(ys)
        ax.plot(np.asarray(x)[mask], ys[mask], label=label)
    ax.set_xlabel(xlabel)
    ax.set_ylabel("bits" if not title.endswith("nats") else "nats")
    ax.set_title(title)
    ax.legend()
    fig.tight_layout()
    fig.savefig(fig_path, dpi=120)
    plt.close(fig)
    return fig_path


GNUPLOT_HINT = (
    "# gnuplot: set datafile separator ','; set key autotitle columnhead;\n"
    "# gnuplot: plot for [i=2:*] '{path}' using 1:i with lines\n"
)


def rate_result_payload(res) -> dict:
    return {
        "rate_bits": scale_from_bits(res.rate_bits),
        "params": res.params,
        "diagnostics": res.diagnostics,
        "log_base": _active_base(),
    }


def _active_base() -> str:
    from .units import get_log_base

    return get_log_base()


def cmd_rate(args) -> int:
    if args.kind == "binary":
        res = binary_compound_rate(args.c1, args.c2)
    elif args.kind == "gaussian":
        res = scalar_gaussian_rate(GaussianScalarSpec(args.rho, args.capacity))
    elif args.kind == "vector-gaussian":
        res = vector_gaussian_rate(GaussianVectorSpec(args.dim, args.c1, args.c2))
    elif args.kind == "kld-gaussian":
        res = kld_gaussian_rate(KldGaussianSpec(args.sigma0_sq, args.epsilon1, args.c2))
    elif args.kind == "continuous":
        res = continuous_ib_rate(SpectrumSpec(parse_bands(args.bands), args.c2))
    else:  # compound-continuous
        res = continuous_compound_rate(args.bandwidth, args.c1, args.c2)
    emit(render_json(rate_result_payload(res)) + "\n", args.output)
    return EXIT_OK


def saddle_payload(sol) -> dict:
    return {
        "value": scale_from_bits(sol.value),
        "rate_bits": scale_from_bits(sol.rate),
        "alpha": sol.alpha,
        "beta": sol.beta,
        "p_w": np.asarray(sol.p_w),
        "p_v": np.asarray(sol.p_v),
        "diagnostics": sol.diagnostics,
        "log_base": _active_base(),
    }


def bounds_payload(pair) -> dict:
    return {
        "lower": scale_from_bits(pair.lower),
        "upper": scale_from_bits(pair.upper),
        "lower_cert": pair.lower_cert,
        "upper_cert": pair.upper_cert,
        "log_base": _active_base(),
    }


def cmd_modulo(args) -> int:
    spec = ModuloSpec(args.n, args.eta1, args.eta2)
    if args.kind == "saddle":
        payload = saddle_payload(low_snr_saddle(spec))
    elif args.kind == "bounds":
        payload = bounds_payload(modulo_bounds(spec, args.support_k))
    else:  # high-snr
        res = high_snr_rate(spec)
        payload = {
            "value": scale_from_bits(res["value"]),
            "rate_bits": scale_from_bits(res["rate_bits"]),
            "params": res["params"],
            "diagnostics": res["diagnostics"],
            "log_base": _active_base(),
        }
    emit(render_json(payload) + "\n", args.output)
    return EXIT_OK


def cmd_tv(args) -> int:
    rng = np.random.default_rng(args.seed)
    if args.kind == "bounds":
        nominal = load_pmf(args.nominal)
        if args.sweep == "delta":
            deltas = parse_range(args.delta)
            rows = []
            lowers, uppers = [], []
            for d in deltas:
                pair = tv_compound_bounds(TvSpec(nominal, float(d), args.eta2), rng=rng)
                lowers.append(scale_from_bits(pair.lower))
                uppers.append(scale_from_bits(pair.upper))
                rows.append([float(d), lowers[-1], uppers[-1]])
            text = render_csv(["delta", "lower", "upper"], rows)
            if args.gnuplot_hint and args.output:
                text = GNUPLOT_HINT.format(path=args.output) + text
            emit(text, args.output)
            if args.output:
                render_figure(
                    args.output, deltas, {"lower": lowers, "upper": uppers},
                    "delta", f"tv bracket, eta2={args.eta2:g}",
                )
            return EXIT_OK
        pair = tv_compound_bounds(TvSpec(nominal, float(args.delta), args.eta2), rng=rng)
        emit(render_json(bounds_payload(pair)) + "\n", args.output)
        return EXIT_OK
    if args.kind == "omega":
        val = entropy_continuity_omega(args.delta, args.n)
        payload = {"omega": scale_from_bits(val), "log_base": _active_base()}
    elif args.kind == "gamma":
        res = min_entropy_tv_ball_uniform(args.delta, args.n)
        payload = {
            "gamma": scale_from_bits(res["gamma"]),
            "argmin": np.asarray(res["argmin"].probs),
            "log_base": _active_base(),
        }
    elif args.kind == "phi":
        nominal = load_pmf(args.nominal)
        res = max_entropy_tv_ball(args.delta, nominal)
        payload = {
            "phi": scale_from_bits(res["phi"]),
            "argmax": np.asarray(res["argmax"].probs),
            "mu": res["mu"],
            "nu": res["nu"],
            "log_base": _active_base(),
        }
    else:  # theta
        if args.channel:
            t = load_channel(args.channel)
        else:
            t = circulant_from_pmf(load_pmf(args.nominal).probs)
        payload = {"theta": dobrushin_theta(t), "log_base": _active_base()}
    emit(render_json(payload) + "\n", args.output)
    return EXIT_OK


def cmd_solve(args) -> int:
    spec = ModuloSpec(args.n, args.eta1, args.eta2)
    trace_rows: list = []
    sol = comib_modulo_solve(
        spec,
        outer_tol=args.outer_tol,
        outer_max=args.outer_max,
        seed=args.seed,
        trace=trace_rows,
    )
    if args.trace:
        rows = [
            [it, side, beta, scale_from_bits(h), scale_from_bits(obj)]
            for it, side, beta, h, obj in trace_rows
        ]
        with open(args.trace, "w", encoding="utf-8") as fh:
            fh.write(render_csv(["iter", "side", "beta", "entropy_p", "objective_bits"], rows))
    emit(render_json(saddle_payload(sol)) + "\n", args.output)
    return EXIT_OK if sol.diagnostics.get("converged") else EXIT_NOCONV


def cmd_oracle(args) -> int:
    rng = np.random.default_rng(args.seed)
    if args.kind == "binary":
        res = binary_compound_oracle(args.c1, args.c2, steps=args.steps)
        a, b = res["arg"]
        header = ["param1", "param2", "value_bits", "arg0", "arg1"]
        rows = [[args.c1, args.c2, scale_from_bits(res["value_bits"]), a, b]]
    else:  # modulo
        spec = ModuloSpec(args.n, args.eta1, args.eta2)
        res = modulo_value_oracle(spec, resolution=args.resolution, rng=rng)
        p_w = np.asarray(res["p_w"], dtype=float)
        p_v = np.asarray(res["p_v"], dtype=float)
        header = ["param1", "param2", "value_bits"] + [
            f"arg{i}" for i in range(p_w.size + p_v.size)
        ]
        rows = [[args.eta1, args.eta2, scale_from_bits(res["value"]), *p_w, *p_v]]
    emit(render_csv(header, rows), args.output)
    return EXIT_OK


def cmd_sweep(args) -> int:
    # modulo-bounds: bracket vs eta2 at fixed eta1, saddle where closed
    etas = parse_range(args.eta2)
    closed = math.log2(args.n - 1)
    rows, lowers, uppers, saddles = [], [], [], []
    for e2 in etas:
        spec = ModuloSpec(args.n, args.eta1, float(e2))
        pair = modulo_bounds(spec)
        lowers.append(scale_from_bits(pair.lower))
        uppers.append(scale_from_bits(pair.upper))
        if args.eta1 >= closed - 1e-12:
            saddles.append(scale_from_bits(low_snr_saddle(spec).value))
        else:
            saddles.append(math.nan)
        rows.append([float(e2), lowers[-1], uppers[-1], saddles[-1]])
    text = render_csv(["eta2", "lower", "upper", "saddle"], rows)
    if args.gnuplot_hint and args.output:
        text = GNUPLOT_HINT.format(path=args.output) + text
    emit(text, args.output)
    if args.output:
        render_figure(
            args.output, etas,
            {"lower": lowers, "upper": uppers, "saddle": saddles},
            "eta2", f"bracket vs eta2, n={args.n}, eta1={args.eta1:g}",
        )
    return EXIT_OK


def cmd_tito(args) -> int:
    rng = np.random.default_rng(args.seed)
    params: dict = {}
    if args.alpha is not None:
        params["alpha"] = args.alpha
    if args.capacities:
        params["capacities"] = [float(c) for c in args.capacities.split(",")]
    if args.eta2 is not None:
        params["eta2"] = args.eta2
    if args.eta1_values:
        params["eta1_values"] = [float(v) for v in args.eta1_values.split(",")]
    res = tito_experiments(args.kind, params, rng=rng)
    rows = [
        [r[0], r[1], scale_from_bits(r[2]), *r[3:]] for r in res["rows"]
    ]
    emit(render_csv(res["header"], rows), args.output)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--log-base", choices=("bits", "nats"), default=None)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("-o", "--output", default=None)
    common.add_argument("--format", choices=("json", "csv"), default=None)

    top = argparse.ArgumentParser(prog="comib", description=__doc__.splitlines()[0])
    sub = top.add_subparsers(dest="command", required=True)

    rate = sub.add_parser("rate", help="closed-form rates").add_subparsers(
        dest="kind", required=True
    )
    p = rate.add_parser("binary", parents=[common])
    p.add_argument("--c1", type=float, required=True)
    p.add_argument("--c2", type=float, required=True)
    p = rate.add_parser("gaussian", parents=[common])
    p.add_argument("--rho", type=float, required=True)
    p.add_argument("--capacity", type=float, required=True)
    p = rate.add_parser("vector-gaussian", parents=[common])
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--c1", type=float, required=True)
    p.add_argument("--c2", type=float, required=True)
    p = rate.add_parser("kld-gaussian", parents=[common])
    p.add_argument("--sigma0-sq", type=float, required=True)
    p.add_argument("--epsilon1", type=float, required=True)
    p.add_argument("--c2", type=float, required=True)
    p = rate.add_parser("continuous", parents=[common])
    p.add_argument("--bands", required=True, help="width:snr,width:snr,...")
    p.add_argument("--c2", type=float, required=True)
    p = rate.add_parser("compound-continuous", parents=[common])
    p.add_argument("--bandwidth", type=float, required=True)
    p.add_argument("--c1", type=float, required=True)
    p.add_argument("--c2", type=float, required=True)

    modulo = sub.add_parser("modulo", help="cyclic-noise saddle and bounds").add_subparsers(
        dest="kind", required=True
    )
    for kind in ("saddle", "bounds", "high-snr"):
        p = modulo.add_parser(kind, parents=[common])
        p.add_argument("--n", type=int, required=True)
        p.add_argument("--eta1", type=float, required=True)
        p.add_argument("--eta2", type=float, required=True)
        if kind == "bounds":
            p.add_argument("--support-k", type=int, default=None)

    tv = sub.add_parser("tv", help="total-variation class bounds").add_subparsers(
        dest="kind", required=True
    )
    p = tv.add_parser("bounds", parents=[common])
    p.add_argument("--nominal", required=True)
    p.add_argument("--delta", required=True, help="number, or start:step:stop with --sweep delta")
    p.add_argument("--eta2", type=float, required=True)
    p.add_argument("--sweep", choices=("delta",), default=None)
    p.add_argument("--gnuplot-hint", action="store_true")
    p = tv.add_parser("omega", parents=[common])
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--n", type=int, required=True)
    p = tv.add_parser("gamma", parents=[common])
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--n", type=int, required=True)
    p = tv.add_parser("phi", parents=[common])
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--nominal", required=True)
    p = tv.add_parser("theta", parents=[common])
    p.add_argument("--channel", default=None, help="JSON matrix file")
    p.add_argument("--nominal", default=None, help="pmf file, used as a circulant")

    p = sub.add_parser("solve", parents=[common], help="alternating compound solver")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--eta1", type=float, required=True)
    p.add_argument("--eta2", type=float, required=True)
    p.add_argument("--outer-tol", type=float, default=1e-9)
    p.add_argument("--outer-max", type=int, default=40)
    p.add_argument("--trace", default=None, help="write iteration rows to this CSV")

    oracle_p = sub.add_parser("oracle", help="brute-force checks").add_subparsers(
        dest="kind", required=True
    )
    p = oracle_p.add_parser("binary", parents=[common])
    p.add_argument("--c1", type=float, required=True)
    p.add_argument("--c2", type=float, required=True)
    p.add_argument("--steps", type=int, default=400)
    p = oracle_p.add_parser("modulo", parents=[common])
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--eta1", type=float, required=True)
    p.add_argument("--eta2", type=float, required=True)
    p.add_argument("--resolution", type=int, default=90)

    sweep = sub.add_parser("sweep", help="curve drivers").add_subparsers(
        dest="kind", required=True
    )
    p = sweep.add_parser("modulo-bounds", parents=[common])
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--eta1", type=float, required=True)
    p.add_argument("--eta2", required=True, help="start:step:stop")
    p.add_argument("--gnuplot-hint", action="store_true")

    p = sub.add_parser("tito", parents=[common], help="three-letter channel tables")
    p.add_argument("--kind", choices=("supersymmetric", "typewriter", "compound"), required=True)
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--capacities", default=None, help="comma-separated bits")
    p.add_argument("--eta2", type=float, default=None)
    p.add_argument("--eta1-values", default=None, help="comma-separated bits")

    return top


def dispatch(argv) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    set_log_base(getattr(args, "log_base", None))
    try:
        if args.command == "rate":
            return cmd_rate(args)
        if args.command == "modulo":
            return cmd_modulo(args)
        if args.command == "tv":
            if args.kind == "theta" and not (args.channel or args.nominal):
                parser.error("tv theta needs --channel or --nominal")
            return cmd_tv(args)
        if args.command == "solve":
            return cmd_solve(args)
        if args.command == "oracle":
            return cmd_oracle(args)
        if args.command == "sweep":
            return cmd_sweep(args)
        if args.command == "tito":
            return cmd_tito(args)
        parser.error(f"unknown command {args.command!r}")
    except (DomainError, CalibrationError) as exc:
        print(f"comib: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except OSError as exc:
        print(f"comib: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except SystemExit as exc:  # parser.error inside dispatch
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    return EXIT_OK


def main() -> None:
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
