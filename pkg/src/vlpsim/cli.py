"""Command-line entry point.

Subcommands: encode, decode, render, simulate, eval, serve.  Exit codes:
0 success, 1 usage error, 2 domain failure (decode failure, strict eval
miss), 3 I/O error.  Diagnostics go to stderr, data to stdout or files.
"""

from __future__ import annotations

import argparse
import csv
import sys

from . import occ_link
from .rs_camera import RsFrame, read_pgm, render_frame, write_pgm
from .scene import ParseError, ValidationError, load_scenario
from .sim_loop import METRICS_COLUMNS, run_headless, write_metrics
from .vision import NeedMoreRows, decode_roi, detect_rois, extract_profile

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DOMAIN = 2
EXIT_IO = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def build_parser() -> _Parser:
    parser = _Parser(prog="vlpsim",
                     description="visible-light positioning simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("encode", help="print the chip frame for a UID")
    p.add_argument("--uid", required=True,
                   help="0-255, decimal or 0x-prefixed hex")

    p = sub.add_parser("decode", help="recover a UID from chips or a PGM image")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--chips", help="text chip stream of 0/1 characters")
    src.add_argument("--image", help="binary PGM frame to decode")

    p = sub.add_parser("render", help="render one rolling-shutter frame")
    p.add_argument("--scenario", default="default")
    p.add_argument("--agent", default=None, help="agent id (default: first)")
    p.add_argument("--t", type=float, default=0.0, help="frame start time, s")
    p.add_argument("--out", required=True, help="output PGM path")
    p.add_argument("--seed", type=int, default=None)

    p = sub.add_parser("simulate", help="run the cooperative loop offline")
    p.add_argument("--scenario", default="default")
    p.add_argument("--ticks", type=int, required=True)
    p.add_argument("--out", required=True, help="metrics CSV path")
    p.add_argument("--messages", default=None,
                   help="also dump the message stream to this file")
    p.add_argument("--seed", type=int, default=None)

    p = sub.add_parser("eval", help="per-frame positioning accuracy CSV")
    p.add_argument("--scenario", default="default")
    p.add_argument("--ticks", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--strict", action="store_true",
                   help="exit 2 if any post-warmup frame has no fix")
    p.add_argument("--warmup", type=int, default=45,
                   help="acquisition ticks exempt from --strict")

    p = sub.add_parser("serve", help="run the position-sharing service")
    p.add_argument("--scenario", default="default")
    p.add_argument("--bind", default="127.0.0.1:7555",
                   help="host:port for the TCP line protocol")
    p.add_argument("--headless", action="store_true",
                   help="no HTTP console endpoint")
    p.add_argument("--http-port", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--debug", action="store_true",
                   help="include ground truth in scene snapshots")
    return parser


def _load(path: str):
    try:
        return load_scenario(path)
    except (ParseError, ValidationError) as e:
        print(f"scenario error: {e}", file=sys.stderr)
        raise SystemExit(EXIT_IO)


def _cmd_encode(args) -> int:
    try:
        uid = int(args.uid, 0)
        seq = occ_link.encode_uid(uid)
    except ValueError as e:
        print(f"encode error: {e}", file=sys.stderr)
        return EXIT_USAGE
    print(seq.as_text())
    return EXIT_OK


def _cmd_decode(args) -> int:
    try:
        if args.chips is not None:
            if not set(args.chips) <= {"0", "1"}:
                print("decode error: chip stream must be 0/1 characters",
                      file=sys.stderr)
                return EXIT_USAGE
            result = occ_link.decode_chips([int(c) for c in args.chips])
        else:
            try:
                pixels = read_pgm(args.image)
            except (OSError, ValueError) as e:
                print(f"decode error: {e}", file=sys.stderr)
                return EXIT_IO
            frame = RsFrame(pixels=pixels, t_start=0.0, camera_pose=None,
                            intrinsics=None)
            rois = detect_rois(frame)
            if not rois:
                print("decode failure: no lamp blobs detected", file=sys.stderr)
                return EXIT_DOMAIN
            roi = max(rois, key=lambda r: r.pixel_count)
            result = decode_roi(extract_profile(frame, roi))
    except (occ_link.NoSync, occ_link.InvalidManchester,
            occ_link.DegenerateProfile, NeedMoreRows, ValueError) as e:
        print(f"decode failure: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_DOMAIN
    print(f"uid={result.uid} confidence={result.confidence:.3f} "
          f"sync_offset={result.sync_offset} chips_consumed={result.chips_consumed}")
    return EXIT_OK


def _cmd_render(args) -> int:
    scenario = _load(args.scenario)
    agent = scenario.agents[0]
    if args.agent is not None:
        matches = [a for a in scenario.agents if a.agent_id == args.agent]
        if not matches:
            print(f"no agent {args.agent!r} in scenario", file=sys.stderr)
            return EXIT_USAGE
        agent = matches[0]
    import numpy as np

    seed = scenario.rng_seed if args.seed is None else args.seed
    frame = render_frame(scenario, agent, args.t,
                         rng=np.random.default_rng(seed))
    try:
        write_pgm(frame, args.out)
    except OSError as e:
        print(f"cannot write {args.out}: {e}", file=sys.stderr)
        return EXIT_IO
    print(f"wrote {args.out}")
    return EXIT_OK


def _cmd_simulate(args) -> int:
    scenario = _load(args.scenario)
    engine, lines = run_headless(scenario, args.ticks, seed=args.seed)
    try:
        write_metrics(engine.metrics_rows, args.out)
        if args.messages:
            with open(args.messages, "w", encoding="utf-8") as fh:
                fh.writelines(lines)
    except OSError as e:
        print(f"cannot write output: {e}", file=sys.stderr)
        return EXIT_IO
    fixes = sum(r["decode_ok"] for r in engine.metrics_rows)
    print(f"{args.ticks} ticks, {len(engine.metrics_rows)} agent-frames, "
          f"{fixes} fixes -> {args.out}")
    return EXIT_OK


EVAL_COLUMNS = ["t_ms", "truth_x", "truth_y", "truth_z",
                "fix_x", "fix_y", "fix_z", "scheme", "residual_px", "n_leds"]


def _cmd_eval(args) -> int:
    scenario = _load(args.scenario)
    engine, _ = run_headless(scenario, args.ticks, seed=args.seed)
    try:
        with open(args.out, "w", newline="", encoding="utf-8") as fh:
            writer = csv.DictWriter(fh, fieldnames=["agent_id", *EVAL_COLUMNS])
            writer.writeheader()
            for row in engine.metrics_rows:
                writer.writerow({k: row[k] for k in ["agent_id", *EVAL_COLUMNS]})
    except OSError as e:
        print(f"cannot write {args.out}: {e}", file=sys.stderr)
        return EXIT_IO
    if args.strict:
        warmup_ms = args.warmup * 1000 // int(scenario.frame_rate_hz)
        misses = [
            r for r in engine.metrics_rows
            if not r["decode_ok"] and r["t_ms"] >= warmup_ms
        ]
        if misses:
            print(f"strict: {len(misses)} post-warmup frames without a fix",
                  file=sys.stderr)
            return EXIT_DOMAIN
    print(f"wrote {args.out}")
    return EXIT_OK


def _cmd_serve(args) -> int:
    from .server import BindError, serve_forever

    scenario = _load(args.scenario)
    host, _, port_text = args.bind.rpartition(":")
    try:
        port = int(port_text)
    except ValueError:
        print(f"invalid --bind {args.bind!r}", file=sys.stderr)
        return EXIT_USAGE
    try:
        serve_forever(scenario, host or "127.0.0.1", port,
                      headless=args.headless, seed=args.seed,
                      debug=args.debug, http_port=args.http_port)
    except BindError as e:
        print(str(e), file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    handler = {
        "encode": _cmd_encode,
        "decode": _cmd_decode,
        "render": _cmd_render,
        "simulate": _cmd_simulate,
        "eval": _cmd_eval,
        "serve": _cmd_serve,
    }[args.command]
    try:
        return handler(args)
    except SystemExit as e:
        return int(e.code or 0)


if __name__ == "__main__":
    sys.exit(main())
