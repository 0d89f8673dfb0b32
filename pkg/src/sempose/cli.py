"""Thin command-line client for the sempose service.

Every subcommand is an HTTP call.  Without ``--server`` the requests run
against an in-process instance of the app (no daemon needed); with
``--server http://host:port`` they go to a remote service and all paths in
arguments refer to that host's filesystem.
"""

import argparse
import json
import sys

from .errors import EXIT_CODES


def _client(server):
    if server:
        import httpx

        return httpx.Client(base_url=server, timeout=None)
    from fastapi.testclient import TestClient

    from .service import create_app

    return TestClient(create_app())


def _config_overrides(path, pairs):
    from .config import read_config_file

    overrides = read_config_file(path) if path else {}
    for pair in pairs or []:
        if "=" not in pair:
            raise SystemExit(f"--set expects key=value, got '{pair}'")
        key, value = pair.split("=", 1)
        overrides[key.strip()] = value.strip()
    return overrides


def _post(args, path, body):
    with _client(args.server) as client:
        resp = client.post(path, json=body)
    if resp.status_code == 200:
        print(json.dumps(resp.json(), indent=2))
        return 0
    try:
        detail = resp.json().get("detail")
    except ValueError:
        detail = None
    if isinstance(detail, dict) and "kind" in detail:
        kind = detail["kind"]
        message = detail.get("message", "")
    elif resp.status_code == 422:
        kind, message = "configuration", json.dumps(detail)
    else:
        kind, message = "internal", resp.text
    print(f"error ({kind}): {message}", file=sys.stderr)
    return EXIT_CODES.get(kind, 1)


def _floats(raw):
    return [float(v) for v in raw.replace(",", " ").split()]


def _ints(raw):
    return [int(v) for v in raw.replace(",", " ").split()]


def build_parser():
    parser = argparse.ArgumentParser(prog="sempose", description=__doc__)
    parser.add_argument("--server", default=None, help="service base URL (default: in-process)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)

    p = sub.add_parser("gen-data", help="generate a synthetic dataset")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--samples", type=int, default=20000)
    p.add_argument("--out", required=True)
    p.add_argument("--config", default=None, help="flat key=value config file")
    p.add_argument("--set", action="append", metavar="KEY=VALUE", dest="sets")

    p = sub.add_parser("train", help="train a codec")
    p.add_argument("--config", default=None)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--set", action="append", metavar="KEY=VALUE", dest="sets")

    p = sub.add_parser("eval", help="evaluate a checkpoint on a split")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--report", default=None, help="per-sample CSV output path")
    p.add_argument("--split", default="test")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--channel", default="awgn", choices=["awgn", "noiseless"])
    p.add_argument("--budget", type=float, default=16.0, help="latency budget tau_th in ms")
    p.add_argument("--latency-model", default=None)
    p.add_argument("--reps", type=int, default=9, help="calibration repetitions")
    p.add_argument("--snr-trace", default=None, help="CSV (sample_index, rsrp_dbm) override")

    p = sub.add_parser("sweep", help="fixed-k rate-distortion sweep")
    p.add_argument("--k-list", required=True, help="comma-separated symbol counts")
    p.add_argument("--seeds", default="0", help="comma-separated seeds")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--config", default=None)
    p.add_argument("--set", action="append", metavar="KEY=VALUE", dest="sets")

    p = sub.add_parser("report", help="SNR-binned report from an eval log")
    p.add_argument("--log", required=True)
    p.add_argument("--bins", required=True, help="comma-separated SNR (dB) bin edges")
    p.add_argument("--window", type=int, default=50)
    p.add_argument("--out", default=None)

    p = sub.add_parser("calibrate", help="measure the latency model of a checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--reps", type=int, default=9)
    p.add_argument("--out", default=None)

    p = sub.add_parser("infer", help="single-sample pose inference")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--features", required=True, help="comma-separated feature vector")
    p.add_argument("--imu", required=True, help="comma-separated relative quaternion (w,x,y,z)")
    p.add_argument("--rsrp", type=float, required=True)
    p.add_argument("--noise-floor", type=float, default=-90.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--channel", default="awgn", choices=["awgn", "noiseless"])
    p.add_argument("--budget", type=float, default=16.0)
    p.add_argument("--latency-model", default=None)

    p = sub.add_parser("export-data", help="dump a dataset to CSV")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--limit", type=int, default=None)

    p = sub.add_parser("dump-symbols", help="write encoded symbols to CSV")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--samples", type=int, default=16)
    p.add_argument("--split", default="test")

    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)

    if args.command == "serve":
        import uvicorn

        from .service import create_app

        uvicorn.run(create_app(), host=args.host, port=args.port)
        return 0

    if args.command == "gen-data":
        body = {
            "out_dir": args.out,
            "samples": args.samples,
            "seed": args.seed,
            "config": _config_overrides(args.config, args.sets),
        }
        return _post(args, "/datasets/generate", body)

    if args.command == "train":
        body = {
            "data_dir": args.data,
            "out_dir": args.out,
            "config": _config_overrides(args.config, args.sets),
        }
        return _post(args, "/train", body)

    if args.command == "eval":
        body = {
            "checkpoint_dir": args.checkpoint,
            "data_dir": args.data,
            "report_path": args.report,
            "split": args.split,
            "seed": args.seed,
            "channel_mode": args.channel,
            "latency_budget_ms": args.budget,
            "calibration_repetitions": args.reps,
            "latency_model_path": args.latency_model,
            "rsrp_trace_path": args.snr_trace,
        }
        return _post(args, "/evaluate", body)

    if args.command == "sweep":
        body = {
            "data_dir": args.data,
            "out_dir": args.out,
            "k_list": _ints(args.k_list),
            "seeds": _ints(args.seeds),
            "config": _config_overrides(args.config, args.sets),
        }
        return _post(args, "/sweep", body)

    if args.command == "report":
        body = {
            "log_path": args.log,
            "bin_edges": _floats(args.bins),
            "window": args.window,
            "out_path": args.out,
        }
        return _post(args, "/report", body)

    if args.command == "calibrate":
        body = {
            "checkpoint_dir": args.checkpoint,
            "repetitions": args.reps,
            "out_path": args.out,
        }
        return _post(args, "/calibrate", body)

    if args.command == "infer":
        body = {
            "checkpoint_dir": args.checkpoint,
            "features": _floats(args.features),
            "imu": _floats(args.imu),
            "rsrp_dbm": args.rsrp,
            "noise_floor_dbm": args.noise_floor,
            "seed": args.seed,
            "channel_mode": args.channel,
            "latency_budget_ms": args.budget,
            "latency_model_path": args.latency_model,
        }
        return _post(args, "/infer", body)

    if args.command == "export-data":
        body = {"data_dir": args.data, "out_csv": args.out, "limit": args.limit}
        return _post(args, "/datasets/export", body)

    if args.command == "dump-symbols":
        body = {
            "checkpoint_dir": args.checkpoint,
            "data_dir": args.data,
            "out_csv": args.out,
            "samples": args.samples,
            "split": args.split,
        }
        return _post(args, "/symbols/dump", body)

    raise SystemExit(f"unknown command {args.command}")


if __name__ == "__main__":
    sys.exit(main())
