"""Command-line interface.

Subcommands: score, select, simulate, eval, sweep, train, attack.
Exit codes: 0 success, 1 validation/parse error (bad input), 2 runtime
failure. Every command that draws random numbers requires an explicit
--seed.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import __version__
from .concepts import load_concept_matrix
from .detection import SCHEMES, evaluate_scheme
from .errors import ParseError, SedkitError, ValidationError
from .logio import (
    LogHeader,
    project_records,
    read_log,
    validate_against_matrix,
    write_log,
)
from .scoring import overall_scores
from .simulate import SimulatorSpec, simulate_records
from .toymodel import (
    TrainConfig,
    fgsm_perturb,
    load_model,
    make_task,
    predict_batch,
    sample_dataset,
    save_model,
    train_sgd,
)
from .workflow import (
    LogBackend,
    SimulatorBackend,
    ToyModelBackend,
    WorkflowConfig,
    emit_report,
    run_scheme_sweep,
    run_selection_workflow,
)


class _Parser(argparse.ArgumentParser):
    # bad arguments are validation errors -> exit code 1
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _write_out(text: str, output) -> None:
    if output:
        Path(output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _csv_names(value):
    return [s.strip() for s in value.split(",") if s.strip()]


def _csv_floats(value):
    return tuple(float(s) for s in _csv_names(value))


def _csv_ints(value):
    return tuple(int(s) for s in _csv_names(value))


def _parse_k_range(value, m_max):
    """Accepts 'a:b' (inclusive), a single k, or a comma list."""
    if value is None:
        return None
    if ":" in value:
        lo, hi = value.split(":", 1)
        lo = int(lo) if lo else 1
        hi = int(hi) if hi else m_max
        return list(range(lo, hi + 1))
    return list(_csv_ints(value))


def _selection(m, selected_names, top_k):
    if selected_names and top_k:
        raise ValidationError("--selected and --top-k are mutually exclusive")
    if selected_names:
        return m.concept_indices(selected_names)
    if top_k:
        if not 1 <= top_k <= m.n_concepts:
            raise ValidationError(f"--top-k must be in [1, {m.n_concepts}]")
        return overall_scores(m).top(top_k)
    return tuple(range(m.n_concepts))


def _add_sim_args(p):
    p.add_argument("--samples", type=int, default=10000)
    p.add_argument("--p-err", type=float, default=0.3)
    p.add_argument("--explanation", choices=["oracle", "noisy"], default="oracle")
    p.add_argument("--flip-q", type=float, default=0.0)
    p.add_argument("--p-err-b", type=float, default=None)
    p.add_argument("--copy-prob", type=float, default=0.0)


def _sim_spec(args) -> SimulatorSpec:
    return SimulatorSpec(
        samples=args.samples,
        p_err=args.p_err,
        explanation=args.explanation,
        flip_q=args.flip_q,
        p_err_b=args.p_err_b,
        copy_prob=args.copy_prob,
    )


def _add_toy_args(p):
    p.add_argument("--dim", type=int, default=16)
    p.add_argument("--noise", type=float, default=0.08)
    p.add_argument("--task-seed", type=int, default=0)
    p.add_argument("--hidden", type=_csv_ints, default=(32,))
    p.add_argument("--lr", type=float, default=0.5)
    p.add_argument("--epochs", type=int, default=80)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--n-train", type=int, default=512)
    p.add_argument("--n-eval", type=int, default=400)
    p.add_argument("--epsilons", type=_csv_floats, default=(0.05, 0.1, 0.15))
    p.add_argument("--attack-loss", choices=["full", "class"], default="full")
    p.add_argument("--sigmoid-threshold", type=float, default=0.5)


def _toy_backend(args) -> ToyModelBackend:
    return ToyModelBackend(
        input_dim=args.dim,
        noise_scale=args.noise,
        task_seed=args.task_seed,
        hidden=tuple(args.hidden),
        learning_rate=args.lr,
        epochs=args.epochs,
        batch_size=args.batch_size,
        n_train=args.n_train,
        n_eval=args.n_eval,
        epsilons=tuple(args.epsilons),
        attack_loss=args.attack_loss,
        threshold=args.sigmoid_threshold,
    )


def _backend_from_args(args):
    if args.backend == "simulator":
        return SimulatorBackend(_sim_spec(args))
    if args.backend == "toy-model":
        return _toy_backend(args)
    if not args.log:
        raise ValidationError("--log is required with --backend log-file")
    return LogBackend.from_file(args.log)


def cmd_score(args) -> int:
    m = load_concept_matrix(args.matrix)
    table = overall_scores(m)
    _write_out(table.to_json() if args.format == "structured" else table.to_text(),
               args.output)
    return 0


def cmd_select(args) -> int:
    if args.config:
        cfg = WorkflowConfig.from_file(args.config)
        if args.matrix:
            cfg = WorkflowConfig(
                matrix=args.matrix,
                threshold=cfg.threshold if args.threshold is None else args.threshold,
                backend=cfg.backend,
                backend_params=cfg.backend_params,
                seed=cfg.seed if args.seed is None else args.seed,
            )
        elif args.threshold is not None or args.seed is not None:
            cfg = WorkflowConfig(
                matrix=cfg.matrix,
                threshold=cfg.threshold if args.threshold is None else args.threshold,
                backend=cfg.backend,
                backend_params=cfg.backend_params,
                seed=cfg.seed if args.seed is None else args.seed,
            )
        if cfg.seed is None:
            raise ValidationError("a seed is required (--seed or config file)")
        m, backend = cfg.build()
        threshold, seed = cfg.threshold, cfg.seed
    else:
        if not args.matrix:
            raise ValidationError("a matrix path is required without --config")
        if args.threshold is None:
            raise ValidationError("--threshold is required without --config")
        if args.seed is None:
            raise ValidationError("--seed is required without --config")
        m = load_concept_matrix(args.matrix)
        backend = _backend_from_args(args)
        threshold, seed = args.threshold, args.seed
    result = run_selection_workflow(m, threshold, backend, seed, scheme=args.scheme)
    status = "reached" if result.reached else "threshold not reached"
    lines = [
        f"# selection: {', '.join(result.selected_names)}",
        f"# status: {status}",
    ]
    _write_out("\n".join(lines) + "\n" + emit_report(result.trace, args.format),
               args.output)
    return 0


def cmd_simulate(args) -> int:
    m = load_concept_matrix(args.matrix)
    selected = _selection(m, args.selected, args.top_k)
    records = simulate_records(m, selected, _sim_spec(args), args.seed)
    header = LogHeader(
        class_names=m.class_names,
        selected_concepts=tuple(m.concept_names[a] for a in selected),
    )
    if args.output:
        write_log(args.output, header, records)
    else:
        write_log(sys.stdout, header, records)
    return 0


def cmd_eval(args) -> int:
    m = load_concept_matrix(args.matrix)
    header, records = read_log(args.log)
    validate_against_matrix(header, m)
    if args.selected:
        records = project_records(records, header.selected_concepts, args.selected)
        selected = m.concept_indices(args.selected)
    else:
        selected = m.concept_indices(header.selected_concepts)
    report = evaluate_scheme(args.scheme, m, selected, records)
    text = report.to_json() if args.format == "structured" else report.summary_line() + "\n"
    _write_out(text, args.output)
    return 0


def cmd_sweep(args) -> int:
    m = load_concept_matrix(args.matrix)
    backend = _backend_from_args(args)
    k_range = _parse_k_range(args.k_range, m.n_concepts)
    result = run_scheme_sweep(m, args.schemes, backend, args.seed, k_range=k_range)
    _write_out(emit_report(result, args.format), args.output)
    return 0


def cmd_train(args) -> int:
    m = load_concept_matrix(args.matrix)
    selected = _selection(m, args.selected, args.top_k) if (
        args.selected or args.top_k
    ) else ()
    task = make_task(m, args.dim, args.noise, args.task_seed)
    cfg = TrainConfig(
        selected=selected,
        hidden=tuple(args.hidden),
        learning_rate=args.lr,
        epochs=args.epochs,
        batch_size=args.batch_size,
        n_train=args.n_train,
        seed=args.seed,
        data_seed=args.data_seed,
        split=args.split,
        split_fraction=args.split_fraction,
    )
    result = train_sgd(task, cfg)
    save_model(
        result.params,
        args.out,
        extra={
            "seed": args.seed,
            "data_seed": args.data_seed,
            "split": args.split,
            "task_seed": args.task_seed,
            "input_dim": args.dim,
            "noise_scale": args.noise,
            "selected_names": [m.concept_names[a] for a in selected],
            "class_names": list(m.class_names),
        },
    )
    if args.curve:
        Path(args.curve).write_text(result.curve_text(), encoding="utf-8")
    if result.history:
        last = result.history[-1]
        sys.stdout.write(
            f"trained {args.out}: epochs={last.epoch} "
            f"loss={last.loss:.12g} accuracy={last.accuracy:.12g}\n"
        )
    else:
        sys.stdout.write(f"trained {args.out}: epochs=0 (initialization only)\n")
    return 0


def cmd_attack(args) -> int:
    m = load_concept_matrix(args.matrix)
    params, meta = load_model(args.model)
    if meta.get("class_names") != list(m.class_names):
        raise ValidationError(
            "model was trained against a different class list than this matrix"
        )
    selected = m.concept_indices(meta.get("selected_names", []))
    if len(selected) != params.n_concepts:
        raise ValidationError(
            f"model metadata lists {len(selected)} selected concepts but the "
            f"explanation head has {params.n_concepts}"
        )
    task = make_task(m, meta["input_dim"], meta["noise_scale"], meta["task_seed"])
    X, Y, truth = sample_dataset(task, selected, args.samples, (args.seed, 404))
    X_adv = (
        fgsm_perturb(params, X, Y, args.epsilon, loss_terms=args.attack_loss)
        if args.epsilon > 0
        else X
    )
    cls_a, bits = predict_batch(params, X_adv, args.sigmoid_threshold)
    cls_b = None
    if args.model_b:
        params_b, meta_b = load_model(args.model_b)
        if meta_b.get("class_names") != list(m.class_names):
            raise ValidationError(
                "second model was trained against a different class list"
            )
        if params_b.input_dim != params.input_dim:
            raise ValidationError("second model has a different input dimension")
        cls_b = predict_batch(params_b, X_adv, args.sigmoid_threshold)[0]
    from .detection import PredictionRecord

    records = [
        PredictionRecord(
            sample_id=f"a{i:06d}",
            true_class=int(truth[i]),
            predicted_class_a=int(cls_a[i]),
            predicted_explanation=tuple(int(b) for b in bits[i]),
            predicted_class_b=None if cls_b is None else int(cls_b[i]),
        )
        for i in range(args.samples)
    ]
    header = LogHeader(
        class_names=m.class_names,
        selected_concepts=tuple(m.concept_names[a] for a in selected),
    )
    if args.out:
        write_log(args.out, header, records)
    else:
        write_log(sys.stdout, header, records)
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="sedkit", description=__doc__)
    parser.add_argument("--version", action="version", version=f"sedkit {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("score", help="print the concept score table")
    p.add_argument("matrix")
    p.add_argument("--format", choices=["tabular", "structured"], default="tabular")
    p.add_argument("--output")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("select", help="run the iterative concept-selection workflow")
    p.add_argument("matrix", nargs="?")
    p.add_argument("--config", help="JSON workflow config file")
    p.add_argument("--threshold", type=float, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--scheme", choices=list(SCHEMES), default="SE")
    p.add_argument(
        "--backend", choices=["simulator", "toy-model", "log-file"], default="simulator"
    )
    p.add_argument("--log", help="prediction log (log-file backend)")
    _add_sim_args(p)
    _add_toy_args(p)
    p.add_argument("--format", choices=["tabular", "structured"], default="tabular")
    p.add_argument("--output")
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("simulate", help="emit a simulated prediction log")
    p.add_argument("matrix")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--selected", type=_csv_names, default=None,
                   help="comma-separated concept names (default: all)")
    p.add_argument("--top-k", type=int, default=None)
    _add_sim_args(p)
    p.add_argument("--output")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("eval", help="evaluate a detection scheme over a log")
    p.add_argument("matrix")
    p.add_argument("log")
    p.add_argument("--scheme", choices=list(SCHEMES), required=True)
    p.add_argument("--selected", type=_csv_names, default=None,
                   help="evaluate on a subset of the log's concepts")
    p.add_argument("--format", choices=["tabular", "structured"], default="tabular")
    p.add_argument("--output")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep", help="P_ed grid over selection sizes and schemes")
    p.add_argument("matrix")
    p.add_argument("--schemes", type=_csv_names, default=list(SCHEMES))
    p.add_argument("--k-range", default=None, help="'a:b', 'k', or 'k1,k2,...'")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument(
        "--backend", choices=["simulator", "toy-model", "log-file"], default="simulator"
    )
    p.add_argument("--log", help="prediction log (log-file backend)")
    _add_sim_args(p)
    _add_toy_args(p)
    p.add_argument("--format", choices=["tabular", "structured"], default="tabular")
    p.add_argument("--output")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("train", help="train a toy classifier on a synthetic task")
    p.add_argument("matrix")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--selected", type=_csv_names, default=None)
    p.add_argument("--top-k", type=int, default=None)
    p.add_argument("--data-seed", type=int, default=None)
    p.add_argument("--split", choices=["all", "first", "second"], default="all",
                   help="train on one side of a shared n-train pool")
    p.add_argument("--split-fraction", type=float, default=0.5)
    _add_toy_args(p)
    p.add_argument("--out", required=True, help="model output path (.npz)")
    p.add_argument("--curve", help="write the training curve (tabular text)")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("attack", help="FGSM-attack a trained model, emit a log")
    p.add_argument("model")
    p.add_argument("matrix")
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--samples", type=int, default=500)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--model-b", help="second (regular) model for R1/SE+R1 logs")
    p.add_argument("--attack-loss", choices=["full", "class"], default="full")
    p.add_argument("--sigmoid-threshold", type=float, default=0.5)
    p.add_argument("--out")
    p.set_defaults(func=cmd_attack)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ParseError, ValidationError) as exc:
        print(f"sedkit: {exc}", file=sys.stderr)
        return 1
    except SedkitError as exc:
        print(f"sedkit: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"sedkit: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
