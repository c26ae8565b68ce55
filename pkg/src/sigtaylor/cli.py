"""Command-line front end.

Subcommands: sig, deriv, fte, ive, price, hedge, converge, verify.
Tabular output is TSV with a header line; reports are JSON.  Exit code 1
means invalid input, 2 means a numerical failure (non-finite values or a
derivative flagged as taken across a kink).
"""
from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .expansion import fte as run_fte, ive_expand, maclaurin, remainder_bound
from .funcderiv import (DiffConfig, Functional, NumericalError, OrderError, delta_word_report, exp_of,
                        running_max, sig_coordinate, strat_integral_of_function, terminal,
                        time_integral)
from .pathcore import PathError, concat, random_lipschitz_path, read_csv, refine
from .pricing import (BachelierMeasure, MCConfig, hedge_coefficients, hedge_error,
                      payoff_library, price, sig_price)
from .signature import (IveKernel, chen_concat, hermite_combination, ito_iterated,
                        iterated_strat_with_kernel, signature, signature_strat)
from .words import basis_reduce, enumerate_words, format_word, parse_word, shuffle


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _fmt(v):
    return repr(float(v))


# ---------------------------------------------------------------------------
# registry

def function_registry():
    """Named functionals for --func.  S_<word> gives a signature coordinate."""
    return {
        "x_t": terminal(lambda x: x, relative=True, name="x_t - x_0"),
        "exp_x": exp_of(sig_coordinate("1"), "exp(x_t - x_0)"),
        "exp_int": exp_of(sig_coordinate("10"), "exp(int (x - x_0) ds)"),
        "int_x": time_integral(lambda x: x, name="int x ds"),
        "int_sin": time_integral(lambda x: np.sqrt(2.0) * np.sin(x), name="sqrt2 int sin(x) ds"),
        "int_x_sq": _square(time_integral(lambda x: x, name="int x ds")),
        "strat_sin": strat_integral_of_function(np.sin, "int sin(x) o dx"),
        "running_max": running_max(),
    }


def _square(f):
    return Functional(lambda X: f(X) ** 2, f"({f.name})^2", f.horizon)


def lookup_function(name):
    if name.startswith("S_"):
        return sig_coordinate(parse_word(name[2:]))
    reg = function_registry()
    if name in reg:
        return reg[name]
    lib = payoff_library()
    if name in lib:
        return lib[name].functional()
    raise UsageError(f"unknown function {name!r}; known: {', '.join(sorted(reg) + sorted(lib))}, S_<word>")


def lookup_payoff(name):
    lib = payoff_library()
    if name not in lib:
        raise UsageError(f"unknown payoff {name!r}; known: {', '.join(sorted(lib))}")
    return lib[name]


def _orders(text):
    if ".." in text:
        a, b = text.split("..")
        return list(range(int(a), int(b) + 1))
    return [int(v) for v in text.split(",")]


def _out(args):
    return open(args.out, "w", encoding="utf-8", newline="") if getattr(args, "out", None) else sys.stdout


def _write(args, lines):
    fh = _out(args)
    try:
        fh.write("\n".join(lines) + "\n")
    finally:
        if fh is not sys.stdout:
            fh.close()


# ---------------------------------------------------------------------------
# subcommands

def cmd_sig(args, diff):
    X = read_csv(args.path)
    S = signature(X, args.depth) if args.method == "exact" else signature_strat(X, args.depth)
    lines = ["word\tvalue"] + [f"{format_word(w)}\t{_fmt(v)}" for w, v in zip(S.words(), S.coords)]
    _write(args, lines)
    return 0


def cmd_deriv(args, diff):
    f = lookup_function(args.func)
    X = read_csv(args.path)
    words = [parse_word(w) for w in args.words.split(",")] if args.words else enumerate_words(args.order)
    lines = ["word\tvalue\tkink_suspect"]
    kink = False
    for w in words:
        r = delta_word_report(f, X, w, diff)
        kink |= r.kink_suspect
        lines.append(f"{format_word(w)}\t{_fmt(r.value)}\t{int(r.kink_suspect)}")
    _write(args, lines)
    return 2 if kink else 0


def cmd_fte(args, diff):
    f = lookup_function(args.func)
    X = read_csv(args.base)
    Y = read_csv(args.pert)
    rep = run_fte(f, X, Y, args.order, diff)
    lines = ["word\tcoeff\tsig\tterm"] + [f"{format_word(w)}\t{_fmt(c)}\t{_fmt(s)}\t{_fmt(c * s)}"
                                          for w, c, s in zip(rep.words, rep.coeffs, rep.sig)]
    if args.report:
        with open(args.report, "w", encoding="utf-8", newline="") as fh:
            fh.write("\n".join(lines) + "\n")
    summary = {"order": args.order, "truncation": rep.truncation, "exact": rep.exact,
               "remainder": rep.remainder}
    _write(args, lines if not args.report else [json.dumps(summary, sort_keys=True)])
    return 0


def cmd_ive(args, diff):
    g = lookup_function(args.payoff)
    X = read_csv(args.path)
    rep = ive_expand(g, X, args.order, diff)
    lines = ["order\tterm", f"0\t{_fmt(rep.base_value)}"]
    lines += [f"{k}\t{_fmt(v)}" for k, v in enumerate(rep.order_terms, start=1)]
    lines.append(f"truncation\t{_fmt(rep.truncation)}")
    if rep.exact is not None:
        lines.append(f"exact\t{_fmt(rep.exact)}")
        lines.append(f"residual\t{_fmt(rep.residual)}")
    _write(args, lines)
    return 0


def cmd_price(args, diff):
    g = lookup_payoff(args.payoff)
    cfg = MCConfig(n_paths=args.mc, seed=args.seed, antithetic=not args.no_antithetic,
                   n_steps=args.steps)
    m_pr = BachelierMeasure(args.sigma_pricing, args.x0)
    coeff_cfg = MCConfig(n_paths=args.coeff_mc, seed=args.seed + 1, n_steps=args.steps)
    sp = sig_price(g, args.sigma_coeff, args.order, m_pr, args.horizon, cfg, coeff_cfg, diff)
    mcr = price(g, m_pr, args.horizon, cfg)
    lines = ["word\tcoeff\texpected_sig\tterm"]
    lines += [f"{format_word(w)}\t{_fmt(c)}\t{_fmt(e)}\t{_fmt(p)}" for w, c, e, p in sp.terms]
    lines.append(f"# sig_price\t{_fmt(sp.price)}\tse\t{_fmt(sp.se)}")
    lines.append(f"# mc_price\t{_fmt(mcr.value)}\tse\t{_fmt(mcr.se)}")
    if g.closed is not None:
        lines.append(f"# closed_form\t{_fmt(g.closed(args.sigma_pricing, args.horizon, args.x0))}")
    _write(args, lines)
    return 0


def _read_coeffs(path):
    out = {}
    with open(path, encoding="utf-8") as fh:
        rows = [r.rstrip("\n").split("\t") for r in fh if r.strip() and not r.startswith("#")]
    if rows and rows[0][0] == "word":
        rows = rows[1:]
    for r in rows:
        out[parse_word(r[0])] = float(r[1])
    return out


def cmd_hedge(args, diff):
    g = lookup_function(args.payoff)
    X = read_csv(args.path)
    coeffs = _read_coeffs(args.coeffs) if args.coeffs else hedge_coefficients(g, args.order, X.x0, diff)
    r = hedge_error(g, coeffs, X, args.order)
    lines = ["order\tcontribution"] + [f"{k}\t{_fmt(v)}" for k, v in sorted(r.per_order.items())]
    lines += [f"# payoff\t{_fmt(r.value)}", f"# portfolio\t{_fmt(r.portfolio)}", f"# error\t{_fmt(r.error)}"]
    _write(args, lines)
    return 0


def cmd_converge(args, diff):
    f = lookup_function(args.func)
    X = read_csv(args.path)
    lines = ["K\ttruncation\texact_remainder\tbound"]
    for K in _orders(args.orders):
        rep = maclaurin(f, X, K, diff)
        bound = float("nan")
        if args.bound:
            bound = remainder_bound(f, X, K, n_eps=args.n_eps, n_times=args.n_times, cfg=diff).total
        lines.append(f"{K}\t{_fmt(rep.truncation)}\t{_fmt(rep.remainder)}\t{_fmt(bound)}")
    _write(args, lines)
    return 0


def verify_suites(depth=4, n_paths=20, seed=7):
    """Identity suites; returns rows (suite, max relative error, threshold)."""
    rng = np.random.default_rng(seed)
    paths = [random_lipschitz_path(rng, 8, rng.uniform(0.5, 1.5), 1.0, rng.normal()) for _ in range(n_paths)]
    words = enumerate_words(depth)

    def rel(a, b, floor=1e-3):
        return abs(a - b) / max(abs(b), floor)

    chen = 0.0
    for X in paths:
        Y = random_lipschitz_path(rng, 5, 0.5, 1.0, X.x_end)
        a = signature(concat(X, Y), depth).coords
        b = chen_concat(signature(X, depth), signature(Y, depth)).coords
        chen = max(chen, float(np.max(np.abs(a - b) / np.maximum(np.abs(b), 1e-3))))

    shuf = 0.0
    sigs = [signature(X, depth) for X in paths]
    for u in words:
        for v in words:
            if len(u) + len(v) > depth:
                continue
            wp = shuffle(u, v)
            for S in sigs:
                shuf = max(shuf, rel(wp.evaluate(S), S[u] * S[v]))

    herm = 0.0
    for X in paths:
        S = signature(X, depth)
        for k in range(depth + 1):
            if any(len(w) > depth for w in hermite_combination(k).words()):
                continue
            herm = max(herm, rel(hermite_combination(k).evaluate(S), ito_iterated(X.t_end, X.x_end - X.x0, k)))

    kern = 0.0
    for X in paths[:5]:
        S = signature(X, depth)
        for w in words:
            if "1" not in w:
                continue
            kk = IveKernel(w, X.t_end)
            a = iterated_strat_with_kernel(kk, refine(X, 8))
            b = iterated_strat_with_kernel(kk, refine(X, 16))
            # the trapezoid error is exactly quadratic in the mesh here
            kern = max(kern, rel((4 * b - a) / 3, S[w]))

    basis = 0.0
    for w in words:
        red = basis_reduce(w)
        for S in sigs:
            basis = max(basis, rel(red.evaluate(S), S[w]))
    tol = 1e-8
    return [("chen", chen, tol), ("shuffle", shuf, tol), ("hermite", herm, tol),
            ("kernel", kern, tol), ("basis", basis, tol)]


def cmd_verify(args, diff):
    rows = verify_suites(args.depth, args.paths, args.seed)
    lines = ["suite\tmax_rel_error\tstatus"]
    ok = True
    for name, err, tol in rows:
        good = err < tol
        ok &= good
        lines.append(f"{name}\t{err:.3e}\t{'pass' if good else 'FAIL'}")
    _write(args, lines)
    return 0 if ok else 2


COMMANDS = {"sig": cmd_sig, "deriv": cmd_deriv, "fte": cmd_fte, "ive": cmd_ive, "price": cmd_price,
            "hedge": cmd_hedge, "converge": cmd_converge, "verify": cmd_verify}


def build_parser():
    p = _Parser(prog="sigtaylor", description=__doc__.split("\n")[0])
    p.add_argument("--config", help="JSON run config (as written by --emit-config)")
    p.add_argument("--emit-config", help="write the resolved run config to this JSON file")
    p.add_argument("--diff", help="JSON file with finite-difference settings")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    s = sub.add_parser("sig", help="signature of a CSV path; TSV columns word, value")
    s.add_argument("--path", required=True)
    s.add_argument("--depth", type=int, default=4)
    s.add_argument("--method", choices=["exact", "strat"], default="exact")
    s.add_argument("--out")

    s = sub.add_parser("deriv", help="functional derivatives; TSV columns word, value, kink_suspect")
    s.add_argument("--func", required=True)
    s.add_argument("--path", required=True)
    s.add_argument("--words", help="comma-separated words ('e' is the empty word)")
    s.add_argument("--order", type=int, default=2)
    s.add_argument("--out")

    s = sub.add_parser("fte", help="Taylor expansion of f(base + pert); TSV word, coeff, sig, term")
    s.add_argument("--func", required=True)
    s.add_argument("--base", required=True)
    s.add_argument("--pert", required=True)
    s.add_argument("--order", type=int, default=3)
    s.add_argument("--report")
    s.add_argument("--out")

    s = sub.add_parser("ive", help="intrinsic value expansion; TSV order, term")
    s.add_argument("--payoff", required=True)
    s.add_argument("--path", required=True)
    s.add_argument("--order", type=int, default=3)
    s.add_argument("--out")

    s = sub.add_parser("price", help="signature price vs Monte Carlo; TSV word, coeff, expected_sig, term")
    s.add_argument("--payoff", required=True)
    s.add_argument("--sigma-coeff", type=float, default=0.2)
    s.add_argument("--sigma-pricing", type=float, default=0.2)
    s.add_argument("--order", type=int, default=3)
    s.add_argument("--mc", type=int, default=200_000)
    s.add_argument("--coeff-mc", type=int, default=20_000)
    s.add_argument("--seed", type=int, default=42)
    s.add_argument("--steps", type=int, default=512)
    s.add_argument("--horizon", type=float, default=1.0)
    s.add_argument("--x0", type=float, default=0.0)
    s.add_argument("--no-antithetic", action="store_true")
    s.add_argument("--out")

    s = sub.add_parser("hedge", help="static hedge error on a tick path; TSV order, contribution")
    s.add_argument("--payoff", required=True)
    s.add_argument("--path", required=True)
    s.add_argument("--coeffs", help="TSV word, value (computed when omitted)")
    s.add_argument("--order", type=int, default=3)
    s.add_argument("--out")

    s = sub.add_parser("converge", help="Maclaurin remainders by order; TSV K, truncation, exact_remainder, bound")
    s.add_argument("--func", required=True)
    s.add_argument("--path", required=True)
    s.add_argument("--orders", default="1..4")
    s.add_argument("--bound", action="store_true", help="also compute the estimated remainder bound")
    s.add_argument("--n-eps", type=int, default=3)
    s.add_argument("--n-times", type=int, default=6)
    s.add_argument("--out")

    s = sub.add_parser("verify", help="identity suites; TSV suite, max_rel_error, status")
    s.add_argument("--depth", type=int, default=4)
    s.add_argument("--paths", type=int, default=20)
    s.add_argument("--seed", type=int, default=7)
    s.add_argument("--out")
    return p


_GLOBAL = ("config", "emit_config", "diff")


def run(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        diff = DiffConfig()
        if args.config:
            with open(args.config, encoding="utf-8") as fh:
                cfg = json.load(fh)
            if args.command is None:
                args = argparse.Namespace(**cfg["args"], command=cfg["command"],
                                          config=None, emit_config=args.emit_config, diff=None)
            diff = DiffConfig.from_dict(cfg.get("diff", {}))
        if args.diff:
            with open(args.diff, encoding="utf-8") as fh:
                diff = DiffConfig.from_dict(json.load(fh))
        if args.command is None:
            parser.print_usage(sys.stderr)
            raise UsageError("a subcommand is required")
        if args.emit_config:
            body = {"command": args.command, "diff": diff.to_dict(),
                    "args": {k: v for k, v in vars(args).items() if k not in _GLOBAL + ("command",)}}
            with open(args.emit_config, "w", encoding="utf-8") as fh:
                json.dump(body, fh, indent=2, sort_keys=True)
                fh.write("\n")
        return COMMANDS[args.command](args, diff)
    except UsageError as e:
        print(str(e), file=sys.stderr)
        return 1
    except (NumericalError, FloatingPointError) as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return 2
    except (PathError, OrderError, ValueError, KeyError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
