import argparse
import sys

from .infer import AdapterConfig, infer_volume


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(
        prog="slice-adapter",
        description="Run a 2D detector over a case directory and emit detections JSON")
    ap.add_argument("case")
    ap.add_argument("--model", default="stub", help="'stub', 'stub:<sidecar>' ...")
    ap.add_argument("--input-size", type=int, default=416, dest="input_size")
    ap.add_argument("--score-threshold", type=float, default=0.25,
                    dest="score_threshold")
    args = ap.parse_args(argv)
    config = AdapterConfig(model=args.model, input_size=args.input_size,
                           score_threshold=args.score_threshold)
    try:
        out = infer_volume(args.case, config)
    except (OSError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    print(f"wrote {out}")
    return 0


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
