"""Command-line workflows: ``train``, ``generate`` and ``validate``.

Exit codes: 0 success, 1 configuration error, 2 data error, 3 numeric failure.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .config import ConfigError, RunConfig, describe_schema, load_config
from .data import DataError, load_prices, load_returns, save_returns, select_window, to_returns
from .io import (
    load_checkpoint,
    read_scenarios,
    save_checkpoint,
    write_histogram_csv,
    write_loss_csv,
    write_qq_csv,
    write_report,
    write_scenarios,
)
from .sampler import generate_scenarios
from .score_net import NumericError
from .trainer import train
from .validate import build_report

log = logging.getLogger("synthmarket")

EXIT_CONFIG, EXIT_DATA, EXIT_NUMERIC = 1, 2, 3


def _load_window(cfg: RunConfig, override_path=None):
    d = cfg["data"]
    path = override_path or d["path"]
    if path is None:
        raise ConfigError("data.path is not set (config or --data)")
    if d["format"] == "prices":
        ds = to_returns(load_prices(path, d["delimiter"]), log=bool(d["log_returns"]))
    elif d["format"] == "returns":
        ds = load_returns(path, d["delimiter"])
    else:
        raise ConfigError("data.format must be 'prices' or 'returns'")
    start = int(d["window_start"])
    length = d["window_length"]
    length = ds.n - start if length is None else int(length)
    return select_window(ds, start, length)


def cmd_train(args) -> int:
    cfg = load_config(args.config, {"train": {"seed": args.seed}, "output": {"dir": args.out}},
                      args.threads)
    ds = _load_window(cfg, args.data)
    spec = cfg.dsde(ds.d)
    obj_cfg = cfg.objective(args.threads)
    tr_cfg = cfg.train()
    out = Path(cfg["output"]["dir"])
    out.mkdir(parents=True, exist_ok=True)
    save_returns(ds, cfg.out("training_data"))
    meta = {"objective": obj_cfg.to_dict(), "train": tr_cfg.to_dict(), "tickers": list(ds.tickers)}

    def on_epoch(epoch, theta, loss):
        k = tr_cfg.checkpoint_every
        if k and epoch and epoch % k == 0 and epoch < tr_cfg.epochs:
            save_checkpoint(out / f"checkpoint_{epoch:06d}.json", theta, spec,
                            {**meta, "epoch": epoch, "loss": loss})

    theta, history = train(ds, spec, obj_cfg, tr_cfg, callback=on_epoch)
    cid = save_checkpoint(cfg.out("checkpoint"), theta, spec,
                          {**meta, "epoch": tr_cfg.epochs, "loss": history[-1]})
    write_loss_csv(cfg.out("loss"), history)
    print(f"trained {tr_cfg.epochs} epochs on n={ds.n}, d={ds.d}: loss {history[0]:.6g} -> "
          f"{history[-1]:.6g}; checkpoint {cfg.out('checkpoint')} (id {cid})")
    return 0


def cmd_generate(args) -> int:
    cfg = load_config(args.config, {"paths": {"seed": args.seed}, "generate": {"m": args.m},
                                    "output": {"dir": args.out}}, args.threads)
    ds = _load_window(cfg, args.data)
    theta, spec, body = load_checkpoint(args.checkpoint)
    if theta.d != ds.d or spec.d != ds.d:
        raise DataError(f"checkpoint dimension d={theta.d} does not match data d={ds.d}")
    m = int(cfg["generate"]["m"])
    scen = generate_scenarios(ds, spec, theta, m, cfg.paths(), checkpoint_id=body.get("id", ""))
    Path(cfg["output"]["dir"]).mkdir(parents=True, exist_ok=True)
    write_scenarios(scen, cfg.out("scenarios"), cfg.out("provenance"), ds.tickers)
    print(f"generated m={m} scenarios (d={ds.d}) -> {cfg.out('scenarios')}")
    return 0


def cmd_validate(args) -> int:
    cfg = load_config(args.config, {"validate": {"seed": args.seed}, "output": {"dir": args.out}},
                      args.threads)
    v = cfg["validate"]
    hist = load_returns(args.hist)
    _, synth = read_scenarios(args.synth)
    if hist.d != synth.shape[1]:
        raise DataError(f"column mismatch: historical d={hist.d}, synthetic d={synth.shape[1]}")
    report = build_report(hist, synth, v["weights"], int(v["permutations"]), int(v["seed"]),
                          int(v["bins"]), int(v["qq_levels"]))
    Path(cfg["output"]["dir"]).mkdir(parents=True, exist_ok=True)
    write_report(cfg.out("report"), report)
    write_qq_csv(cfg.out("qq"), report)
    write_histogram_csv(cfg.out("histogram"), report)
    print(f"T_cvm={report.t_cvm:.6g} p_cvm={report.p_cvm:.4f} "
          f"kappa_hist={report.kappa_hist:.6g} kappa_synth={report.kappa_synth:.6g}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="synthmarket",
        description="Train score-based diffusion models on asset returns, generate and validate scenarios.",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog=describe_schema() + "\n\nexit codes: 0 ok, 1 config error, 2 data error, 3 numeric failure",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, needs_config=True):
        p.add_argument("--config", required=needs_config, help="run configuration JSON")
        p.add_argument("--out", help="output directory (overrides output.dir)")
        p.add_argument("--seed", type=int, help="seed override for this command")
        p.add_argument("--threads", type=int, default=1, help="worker thread cap (default 1)")
        p.formatter_class = argparse.RawDescriptionHelpFormatter
        p.epilog = describe_schema()

    p = sub.add_parser("train", help="fit the score network; writes checkpoint and loss CSV")
    common(p)
    p.add_argument("--data", help="input CSV (overrides data.path)")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("generate", help="sample synthetic scenarios from a checkpoint")
    common(p)
    p.add_argument("--checkpoint", required=True, help="checkpoint JSON written by train")
    p.add_argument("--data", help="input CSV (overrides data.path)")
    p.add_argument("--m", type=int, help="number of scenarios (overrides generate.m)")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("validate", help="compare historical returns with scenarios")
    common(p, needs_config=False)
    p.add_argument("--hist", required=True, help="historical returns CSV (e.g. training_returns.csv)")
    p.add_argument("--synth", required=True, help="scenario CSV written by generate")
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (DataError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
