"""Command line entry point: render one preset figure from a run directory."""

import argparse
import sys

from .figures import PlotError, preset_spec, render_price_figure

EXIT_OK = 0
EXIT_BAD_INPUT = 2
EXIT_IO = 4


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="plot",
        description="Render a price-vs-time PNG from emitted series CSVs.",
    )
    parser.add_argument("--preset", required=True, help="scenario id, e.g. fig1-left")
    parser.add_argument("--in", dest="in_dir", required=True, help="directory holding the CSVs")
    parser.add_argument("--out", dest="out_dir", required=True, help="directory for the PNG")
    parser.add_argument("--x", default="t", help="x column (default t)")
    parser.add_argument("--y", default="price", help="y column (default price)")
    args = parser.parse_args(argv)

    try:
        spec = preset_spec(args.preset, args.in_dir, args.out_dir, args.x, args.y)
        result = render_price_figure(spec)
    except PlotError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    except OSError as exc:
        print(f"output error: {exc}", file=sys.stderr)
        return EXIT_IO

    print(
        f"{result.output} series={result.n_series} "
        f"x=[{result.x_range[0]:g}, {result.x_range[1]:g}] "
        f"y=[{result.y_range[0]:g}, {result.y_range[1]:g}]"
    )
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
