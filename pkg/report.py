"""
Reads experiment summary CSV files, and produces an HTML report of them
(or a plain-text one with ``--text``).
"""

import sys

from kmeq.report import main

if __name__ == "__main__":
    (_, *args) = sys.argv
    if args[:1] == ["--text"]:
        exit(main(args[1:], output="text"))
    exit(main(args))
