"""Recompute every reference budget row and print how it compares."""

import sys

from fourierft.budget import compare_reference, format_bytes


def main():
    mismatches = 0
    for c in compare_reference():
        r = c.report
        tag = "ok " if c.matches else "off"
        mismatches += not c.matches
        line = (f"{tag} {r.preset:<13} {r.method:<8} {r.size:>6}  {r.trainable_params:>10} "
                f"(printed {c.printed_params:>6})  {format_bytes(r.bytes):>11} (printed {c.printed_bytes:>8})")
        print(line + (f"  # {c.note}" if c.note else ""))
    print(f"{mismatches} rows differ from the printed figures")
    return 0


if __name__ == "__main__":
    sys.exit(main())
