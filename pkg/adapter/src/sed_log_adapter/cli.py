"""Command-line entry point mirroring AdapterConfig.

Model and dataset are import references of the form ``package.module:attr``.
The attribute may be the object itself or a zero-argument callable
returning it (handy for datasets built on demand).

Exit codes: 0 success, 1 validation error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import importlib
import sys

from .adapter import AdapterConfig, AdapterError, export_log


def resolve_reference(ref: str):
    if ":" not in ref:
        raise AdapterError(f"reference {ref!r} must look like 'module:attr'")
    module_name, attr = ref.split(":", 1)
    try:
        module = importlib.import_module(module_name)
    except ImportError as exc:
        raise AdapterError(f"cannot import {module_name!r}: {exc}") from None
    try:
        return getattr(module, attr)
    except AttributeError:
        raise AdapterError(f"{module_name!r} has no attribute {attr!r}") from None


def _names(value: str):
    return [s.strip() for s in value.split(",") if s.strip()]


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser() -> _Parser:
    parser = _Parser(prog="sed-log-adapter", description=__doc__)
    parser.add_argument("--model", required=True,
                        help="import reference 'module:callable'")
    parser.add_argument("--dataset", required=True,
                        help="import reference 'module:iterable' "
                             "(or a zero-arg callable returning one)")
    parser.add_argument("--classes", required=True, type=_names,
                        help="comma-separated class names, log order")
    parser.add_argument("--concepts", type=_names, default=[],
                        help="comma-separated selected concept names, bit order")
    parser.add_argument("--threshold", type=float, default=0.5,
                        help="sigmoid cut for explanation bits")
    parser.add_argument("--out", required=True, help="log output path")
    parser.add_argument("--matrix",
                        help="concept-matrix file to validate names against")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        model = resolve_reference(args.model)
        dataset = resolve_reference(args.dataset)
        if callable(dataset) and not hasattr(dataset, "__iter__"):
            dataset = dataset()
        cfg = AdapterConfig(
            model=model,
            dataset=dataset,
            class_names=args.classes,
            concept_names=args.concepts,
            threshold=args.threshold,
            output=args.out,
            matrix=args.matrix,
        )
        count = export_log(cfg)
    except AdapterError as exc:
        print(f"sed-log-adapter: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"sed-log-adapter: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {count} records to {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
