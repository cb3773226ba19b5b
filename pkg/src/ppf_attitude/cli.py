"""Command-line front end of the experiment harness.

    ppf-attitude --print-default-config [cont|disc]
    ppf-attitude run [--config FILE] [--estimator semi|direct|both]
                     [--form cont|disc|quat] [--seed N] [--out DIR] [--runs N]
                     [--strict | --explore] [--set KEY=VALUE ...]

Exit status: 0 when every run stays inside the envelope (always 0 under
``--explore``), 2 when a strict run breaches or aborts, 1 on configuration
or I/O errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from . import harness as h
from .errors import ConfigInvalid

EXIT_OK, EXIT_ERROR, EXIT_BREACH = 0, 1, 2


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ppf-attitude", description=__doc__.split("\n")[0])
    p.add_argument(
        "--print-default-config",
        nargs="?",
        const="cont",
        choices=("cont", "disc"),
        metavar="PRESET",
        help="print the continuous (default) or discrete benchmark config as JSON and exit",
    )
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command")
    run = sub.add_parser("run", help="run an experiment")
    run.add_argument("--config", type=Path, help="JSON config file (default: continuous benchmark)")
    run.add_argument("--estimator", choices=h.ESTIMATORS + ("both",))
    run.add_argument("--form", choices=h.FORMS)
    run.add_argument("--seed", type=int)
    run.add_argument("--runs", type=int)
    run.add_argument("--out", type=Path, default=Path("."))
    pol = run.add_mutually_exclusive_group()
    pol.add_argument("--strict", dest="policy", action="store_const", const="strict")
    pol.add_argument("--explore", dest="policy", action="store_const", const="explore")
    run.add_argument(
        "--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
        help="override any config key, e.g. --set ppf.xi_inf=0.05 (repeatable)",
    )  # fmt: skip
    return p


def _build_config(args) -> h.ExperimentConfig:
    cfg = h.load_config(args.config) if args.config else h.continuous_config()
    cfg = h.apply_overrides(cfg, args.overrides)
    flags = {
        k: v
        for k, v in (
            ("estimator", args.estimator), ("form", args.form), ("seed", args.seed),
            ("runs", args.runs), ("policy", args.policy),
        )
        if v is not None
    }  # fmt: skip
    return replace(cfg, **flags).validate()


def _run(cfg: h.ExperimentConfig, out: Path) -> bool:
    out.mkdir(parents=True, exist_ok=True)
    ok = True
    if cfg.runs == 1:
        for kind, res in h.run_experiment(cfg).items():
            tag = f"{kind}_{cfg.form}_seed{cfg.seed}"
            h.write_csv(res.record, out / f"trajectory_{tag}.csv")
            h.write_json(res.summary.to_flat(), out / f"summary_{tag}.json")
            s = res.summary
            status = "pass" if s.envelope_passed else "FAIL"
            extra = f" aborted: {s.abort_reason}" if not s.completed else ""
            print(f"{tag}: mean {s.mean:.4g} std {s.std:.4g} envelope {status}{extra}")
            ok &= s.envelope_passed
    else:
        for kind, ens in h.run_monte_carlo(cfg).items():
            tag = f"{kind}_{cfg.form}_seed{cfg.seed}_runs{cfg.runs}"
            h.write_json(ens.to_flat(), out / f"summary_{tag}.json")
            print(
                f"{tag}: mean {ens.mean:.4g} std {ens.std:.4g} "
                f"completed {ens.n_completed}/{ens.n_runs} pass rate {ens.pass_rate:.2f}"
            )
            ok &= ens.pass_rate == 1.0
    return ok


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    if args.print_default_config:
        cfg = h.continuous_config() if args.print_default_config == "cont" else h.discrete_config()
        print(json.dumps(cfg.to_dict(), indent=2))
        return EXIT_OK
    if args.command != "run":
        _parser().print_usage(sys.stderr)
        return EXIT_ERROR
    try:
        cfg = _build_config(args)
        ok = _run(cfg, args.out)
    except (ConfigInvalid, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    if not ok and cfg.policy == "strict":
        return EXIT_BREACH
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
