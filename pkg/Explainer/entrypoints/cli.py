"""
Command-line entry point.

    python entrypoints/cli.py train    --data wine.csv --label quality --threshold median \
                                       --model svm.json --gamma 1 10 --C 1 10
    python entrypoints/cli.py explain  --data wine.csv --model svm.json --method lrp --heuristic
    python entrypoints/cli.py evaluate --data wine.csv --model svm.json --method lrp --method shap
    python entrypoints/cli.py ablate   --data moons.csv --model svm.json
    python entrypoints/cli.py surface  --model svm.json --resolution 120
    python entrypoints/cli.py neuralize --model svm.json

Exit codes: 0 success, 2 invalid configuration or data, 3 model/method
incompatibility, 4 numerical failure, 1 anything unexpected.
"""
import argparse
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional

ROOT = Path(__file__).resolve().parents[1]
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))

import numpy as np  # noqa: E402
import pandas as pd  # noqa: E402
from sklearn.model_selection import KFold  # noqa: E402

from config import Config  # noqa: E402
from datasets import CsvSchema, load_csv, preprocess, save_dataset  # noqa: E402
from errors import (  # noqa: E402
    ConfigError,
    DimensionMismatchError,
    ExplainerError,
    IncompatibleMethodError,
    exit_code_for,
)
from evaluation import KdeInpainter, evaluate_method  # noqa: E402
from logging_utils import setup_run_logging  # noqa: E402
from model_wrappers.baseline_explainers import make_config  # noqa: E402
from model_wrappers.explainers import build_explainer, check_method, explain_batch  # noqa: E402
from model_wrappers.lrp_explainer import LrpHyperparams, heuristic_params  # noqa: E402
from model_wrappers.neuralize import (  # noqa: E402
    net_to_dict,
    neural_output,
    neuralize,
    sign_equivalence_check,
)
from models import decision, load_model_document, model_hash, predict_sign, save_model  # noqa: E402
from outputs import (  # noqa: E402
    metadata,
    relevance_table,
    write_curves,
    write_explanation,
    write_json,
    write_relevance_table,
    write_summary,
)
from plotting import (  # noqa: E402
    plot_ablation,
    plot_flipping_curves,
    plot_relevance_scatter,
    plot_surface,
)
from progress_tracker import create_progress_tracker  # noqa: E402
from trainers import fit_model, grid_search  # noqa: E402

logger = logging.getLogger('explainer.cli')

DEFAULT_GRID = {'gamma': [1.0], 'C': [1.0], 'k': [5], 'ridge': [1e-3]}
ABLATION_ARMS = ('gi', 'gi-neural', 'lrp')


@dataclass
class RunConfig:
    command: str
    out: Path
    seed: int
    threads: int
    data: Optional[str] = None
    model: Optional[str] = None
    methods: List[str] = field(default_factory=list)
    heuristic: bool = False
    etas: List[float] = field(default_factory=list)
    beta: Optional[float] = None
    kappa: Optional[int] = None
    steps: Optional[int] = None
    permutations: Optional[int] = None
    repeats: int = Config.FLIP_REPEATS
    samples: Optional[int] = None
    crossfit: Optional[int] = None
    resolution: int = Config.SURFACE_RESOLUTION
    scatter: bool = False
    probes: int = 0
    kind: str = 'svm'
    grid: dict = field(default_factory=dict)
    folds: int = Config.CV_FOLDS
    schema: Optional[CsvSchema] = None
    schema_from_flags: bool = False


# ---------------------------------------------------------------------------
# Argument parsing / validation
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--out', default=None, help='output directory')
    common.add_argument('--seed', type=int, default=None)
    common.add_argument('--threads', type=int, default=None)
    common.add_argument('--run-id', default=None)
    common.add_argument('--log-level', default=None)

    data = argparse.ArgumentParser(add_help=False)
    data.add_argument('--data', default=None, help='numeric CSV with header')
    data.add_argument('--label', default=None, help="label column (default 'label')")
    data.add_argument('--threshold', default=None,
                      help="binarize the label: 'median', 'q0.7' or a number")
    data.add_argument('--target', default=None, help='real-valued target column (KRR)')

    overrides = argparse.ArgumentParser(add_help=False)
    overrides.add_argument('--method', action='append', default=None)
    overrides.add_argument('--heuristic', action='store_true',
                           help='use the default η/β/κ derived from the model')
    overrides.add_argument('--eta', action='append', type=float, default=None)
    overrides.add_argument('--beta', type=float, default=None)
    overrides.add_argument('--kappa', type=int, default=None)
    overrides.add_argument('--steps', type=int, default=None, help='integrated gradients steps')
    overrides.add_argument('--permutations', type=int, default=None, help='Shapley permutations')
    overrides.add_argument('--samples', type=int, default=None,
                           help='cap on the number of explained examples')

    parser = argparse.ArgumentParser(prog='explainer', description=__doc__.split('\n')[1])
    sub = parser.add_subparsers(dest='command', required=True)

    train = sub.add_parser('train', parents=[common, data], help='grid-search and save a model')
    train.add_argument('--model', required=True, help='model file to write')
    train.add_argument('--kind', choices=('svm', 'knn', 'krr'), default='svm')
    train.add_argument('--gamma', nargs='+', type=float, default=None)
    train.add_argument('--C', nargs='+', type=float, default=None)
    train.add_argument('--k', nargs='+', type=int, default=None)
    train.add_argument('--ridge', nargs='+', type=float, default=None)
    train.add_argument('--folds', type=int, default=Config.CV_FOLDS)

    explain = sub.add_parser('explain', parents=[common, data, overrides],
                             help='write per-sample explanations')
    explain.add_argument('--model', required=True)
    explain.add_argument('--crossfit', type=int, default=None,
                         help='retrain on K-1 folds and explain every held-out fold')
    explain.add_argument('--scatter', action='store_true',
                         help='relevance vs input scatter plot per feature')

    evaluate = sub.add_parser('evaluate', parents=[common, data, overrides],
                              help='pixel-flipping AUFC per method')
    evaluate.add_argument('--model', required=True)
    evaluate.add_argument('--repeats', type=int, default=Config.FLIP_REPEATS)

    ablate = sub.add_parser('ablate', parents=[common, data, overrides],
                            help='GI on f, GI on g and LRP side by side')
    ablate.add_argument('--model', required=True)
    ablate.add_argument('--repeats', type=int, default=Config.FLIP_REPEATS)

    surface = sub.add_parser('surface', parents=[common], help='f and g heatmaps of a 2-D model')
    surface.add_argument('--model', required=True)
    surface.add_argument('--resolution', type=int, default=Config.SURFACE_RESOLUTION)

    neural = sub.add_parser('neuralize', parents=[common], help='export the neuralized model')
    neural.add_argument('--model', required=True)
    neural.add_argument('--probes', type=int, default=0,
                        help='random probes for a sign-equivalence check')
    return parser


def _positive(name, value, integer=False):
    if value is None:
        return
    if integer and int(value) != value:
        raise ConfigError(f"--{name} must be an integer, got {value}")
    if not value > 0:
        raise ConfigError(f"--{name} must be positive, got {value}")


def _schema(args) -> Optional[CsvSchema]:
    if getattr(args, 'data', None) is None:
        return None
    if args.target is not None:
        if getattr(args, 'kind', 'krr') != 'krr':
            raise ConfigError("--target applies to --kind krr; use --label for classifiers")
        return CsvSchema(label_column=args.target, regression=True)
    if getattr(args, 'kind', None) == 'krr':
        raise ConfigError("--kind krr needs --target")
    return CsvSchema(label_column=args.label or 'label', threshold=args.threshold)


def validate(args) -> RunConfig:
    """Check every flag against its domain before any computation."""
    seed = Config.DEFAULT_SEED if args.seed is None else args.seed
    threads = Config.DEFAULT_THREADS if args.threads is None else args.threads
    if int(seed) != seed or seed < 0:
        raise ConfigError(f"--seed must be a nonnegative integer, got {seed}")
    _positive('threads', threads, integer=True)
    out = Path(args.out or Config.OUTPUT_FOLDER)
    cfg = RunConfig(command=args.command, out=out, seed=int(seed), threads=int(threads),
                    data=getattr(args, 'data', None), model=args.model)

    if args.command == 'train':
        if cfg.data is None:
            raise ConfigError("train needs --data")
        cfg.kind = args.kind
        cfg.folds = args.folds
        if args.folds < 2:
            raise ConfigError(f"--folds must be >= 2, got {args.folds}")
        grid = {}
        for key, values in (('gamma', args.gamma), ('C', args.C),
                            ('k', args.k), ('ridge', args.ridge)):
            grid[key] = list(values) if values is not None else list(DEFAULT_GRID[key])
        for g in grid['gamma']:
            _positive('gamma', g)
        for c in grid['C']:
            _positive('C', c)
        for k in grid['k']:
            if k < 1 or k % 2 == 0:
                raise ConfigError(f"--k must be a positive odd integer, got {k}")
        for r in grid['ridge']:
            if r < 0:
                raise ConfigError(f"--ridge must be nonnegative, got {r}")
        cfg.grid = grid
        cfg.schema = _schema(args)
        return cfg

    if args.command in ('explain', 'evaluate', 'ablate'):
        cfg.methods = list(args.method or [])
        for method in cfg.methods:
            if method not in Config.METHODS:
                raise ConfigError(
                    f"unknown method '{method}' (choose from {', '.join(Config.METHODS)})"
                )
        cfg.heuristic = args.heuristic
        if args.heuristic and any(v is not None for v in (args.eta, args.beta, args.kappa)):
            raise ConfigError("--heuristic cannot be combined with --eta/--beta/--kappa")
        cfg.etas = list(args.eta or [])
        for eta in cfg.etas:
            if not 0.0 <= eta <= 1.0:
                raise ConfigError(f"--eta must lie in [0, 1], got {eta}")
        _positive('beta', args.beta)
        if args.kappa is not None and args.kappa < 0:
            raise ConfigError(f"--kappa must be nonnegative, got {args.kappa}")
        _positive('steps', args.steps, integer=True)
        _positive('permutations', args.permutations, integer=True)
        _positive('samples', args.samples, integer=True)
        cfg.beta, cfg.kappa = args.beta, args.kappa
        cfg.steps, cfg.permutations, cfg.samples = args.steps, args.permutations, args.samples
        cfg.schema = _schema(args)
        cfg.schema_from_flags = any(
            v is not None for v in (args.label, args.threshold, args.target)
        )
        if cfg.data is None:
            raise ConfigError(f"{args.command} needs --data")
    if args.command == 'explain':
        if args.crossfit is not None and args.crossfit < 2:
            raise ConfigError(f"--crossfit must be >= 2, got {args.crossfit}")
        cfg.crossfit = args.crossfit
        cfg.scatter = args.scatter
    if args.command in ('evaluate', 'ablate'):
        _positive('repeats', args.repeats, integer=True)
        cfg.repeats = args.repeats
    if args.command == 'surface':
        if args.resolution < 2:
            raise ConfigError(f"--resolution must be >= 2, got {args.resolution}")
        cfg.resolution = args.resolution
    if args.command == 'neuralize':
        if args.probes < 0:
            raise ConfigError(f"--probes must be nonnegative, got {args.probes}")
        cfg.probes = args.probes
    return cfg


# ---------------------------------------------------------------------------
# Shared helpers
# ---------------------------------------------------------------------------

def _lrp_params(cfg: RunConfig, model):
    """(tag, hyperparams) per requested η; the model's heuristic fills what flags leave open."""
    base = heuristic_params(model)
    pooling = 'ranked' if model.kind == 'knn' else 'smooth'
    etas = cfg.etas or [base.eta]
    sets = []
    for eta in etas:
        if pooling == 'ranked':
            params = LrpHyperparams(eta=eta, kappa=base.kappa if cfg.kappa is None else cfg.kappa)
        else:
            params = LrpHyperparams(eta=eta, beta=base.beta if cfg.beta is None else cfg.beta)
        params.validate(pooling)
        tag = 'lrp' if len(etas) == 1 else f'lrp-eta{eta:g}'
        sets.append((tag, params))
    return sets


def _method_runs(cfg: RunConfig, model, default_methods):
    """Validated (tag, method, lrp params) list; raises before any computation."""
    methods = cfg.methods or list(default_methods)
    runs = []
    for method in methods:
        check_method(method, model)
        if method == 'lrp':
            runs.extend((tag, 'lrp', params) for tag, params in _lrp_params(cfg, model))
        else:
            runs.append((method, method, None))
    return runs


def _prepare(cfg: RunConfig, training: dict, model):
    """Reproduce the training split from the schema and seed recorded with the model."""
    schema = cfg.schema
    if training.get('schema') and not cfg.schema_from_flags:
        schema = CsvSchema.from_dict(training['schema'])
    seed = int(training.get('seed', cfg.seed))
    prepared = preprocess(load_csv(cfg.data, schema), seed=seed)
    if prepared.train.dim != model.dim:
        raise DimensionMismatchError(model.dim, prepared.train.dim)
    return prepared


def _explain_split(cfg: RunConfig, prepared):
    split = prepared.explain
    if cfg.samples is not None:
        split = split.subset(np.arange(min(cfg.samples, len(split))))
    return split


def _sidecar(method, explainer, model, mhash, x, net=None, variant=None):
    payload = {
        'method': method,
        'hyperparams': explainer.hyperparams,
        'model_hash': mhash,
        'model_kind': model.kind,
        'f_value': float(decision(model, x)),
    }
    if net is not None:
        payload['g_value'] = float(neural_output(net, x))
    if variant is not None:
        payload['variant'] = variant
    return payload


def _write_explanation_set(out_dir, tag, method, explainer, model, split, R, norm,
                           mhash, net=None, scatter=False):
    inputs = norm.inverse(split.features)
    for row, sample_id in enumerate(split.sample_ids):
        write_explanation(
            out_dir, int(sample_id), split.feature_names, R[row], inputs[row],
            _sidecar(method, explainer, model, mhash, split.features[row],
                     net if method in ('lrp', 'gi-neural') else None,
                     variant=tag if tag != method else None),
        )
    table = relevance_table(split.sample_ids, split.feature_names, inputs, R)
    write_relevance_table(Path(out_dir) / 'relevance_table.csv', table)
    if scatter:
        for k, name in enumerate(split.feature_names):
            plot_relevance_scatter(name, inputs[:, k], R[:, k],
                                   Path(out_dir) / f'scatter_{name}.svg',
                                   feature_mean=float(norm.mean[k]))


def _summary_json(path, summaries, model, mhash, extra=None):
    write_json(path, {
        'model_hash': mhash,
        'model_kind': model.kind,
        'summaries': [
            {**s.to_row(), 'stderr': float(s.stderr), 'mean_curve': s.mean_curve().tolist()}
            for s in summaries
        ],
        **(extra or {}),
        'metadata': metadata(),
    })


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_train(cfg: RunConfig) -> int:
    prepared = preprocess(load_csv(cfg.data, cfg.schema), seed=cfg.seed)
    train = prepared.train
    model, report = grid_search(cfg.kind, train.features, train.labels, cfg.grid,
                                folds=cfg.folds, seed=cfg.seed, feature_names=train.feature_names)
    summary = report.to_dict()
    if cfg.kind != 'krr':
        pred = predict_sign(model, prepared.validation.features)
        summary['validation_accuracy'] = float(np.mean(pred == prepared.validation.labels))

    save_model(model, cfg.model, extra={
        'schema': cfg.schema.to_dict(),
        'seed': cfg.seed,
        'params': report.best_params,
        'report': summary,
        'normalization': prepared.normalization.to_dict(),
    })
    prepared_dir = cfg.out / 'prepared'
    for name in ('train', 'validation', 'explain'):
        save_dataset(getattr(prepared, name), prepared_dir / f'{name}.csv',
                     label_column=cfg.schema.label_column)
    write_json(cfg.out / 'train_report.json', {
        **summary,
        'model_hash': model_hash(model),
        'metadata': metadata(),
    })
    logger.info("Best %s params %s (score %.4f)", cfg.kind, report.best_params,
                report.best_score)
    return 0


def cmd_explain(cfg: RunConfig) -> int:
    model, training = load_model_document(cfg.model)
    runs = _method_runs(cfg, model, ['lrp'])
    prepared = _prepare(cfg, training, model)
    progress = create_progress_tracker()
    root = cfg.out / 'explanations'

    if cfg.crossfit:
        return _explain_crossfit(cfg, model, training, prepared, runs, progress, root)

    split = _explain_split(cfg, prepared)
    bconfig = make_config(prepared.train.features, cfg.steps, cfg.permutations, cfg.seed)
    mhash = model_hash(model)
    net = neuralize(model) if any(m in ('lrp', 'gi-neural') for _, m, _ in runs) else None
    for tag, method, params in runs:
        explainer = build_explainer(method, model, bconfig, params, net)
        R = explain_batch(explainer, split.features, cfg.threads, split.sample_ids, progress)
        _write_explanation_set(root / tag, tag, method, explainer, model, split, R,
                               prepared.normalization, mhash, net, cfg.scatter)
        logger.info("Explained %d samples with %s", len(split), tag)
    progress.complete_all()
    return 0


def _explain_crossfit(cfg, model, training, prepared, runs, progress, root):
    params = training.get('params')
    if not params:
        raise ConfigError("--crossfit needs a model file with recorded training params")
    pool = prepared.train
    X = np.vstack([pool.features, prepared.validation.features])
    y = np.concatenate([pool.labels, prepared.validation.labels])
    ids = np.concatenate([pool.sample_ids, prepared.validation.sample_ids])
    folds = list(KFold(n_splits=cfg.crossfit, shuffle=True, random_state=cfg.seed).split(X))

    results = {tag: np.zeros_like(X) for tag, _, _ in runs}
    for fold, (train_idx, test_idx) in enumerate(folds):
        fold_model = fit_model(model.kind, X[train_idx], y[train_idx], params,
                               feature_names=model.feature_names)
        fold_runs = _method_runs(cfg, fold_model, [m for _, m, _ in runs])
        needs_net = any(m in ('lrp', 'gi-neural') for _, m, _ in fold_runs)
        net = neuralize(fold_model) if needs_net else None
        bconfig = make_config(X[train_idx], cfg.steps, cfg.permutations, cfg.seed)
        for tag, method, lrp in fold_runs:
            explainer = build_explainer(method, fold_model, bconfig, lrp, net)
            results[tag][test_idx] = explain_batch(explainer, X[test_idx], cfg.threads,
                                                   ids[test_idx], progress)
        logger.info("Cross-fit fold %d/%d: %d held out", fold + 1, cfg.crossfit, len(test_idx))

    norm = prepared.normalization
    inputs = norm.inverse(X)
    for tag, R in results.items():
        table = relevance_table(ids, pool.feature_names, inputs, R)
        write_relevance_table(root / tag / 'relevance_table.csv', table)
        if cfg.scatter:
            for k, name in enumerate(pool.feature_names):
                plot_relevance_scatter(name, inputs[:, k], R[:, k],
                                       root / tag / f'scatter_{name}.svg',
                                       feature_mean=float(norm.mean[k]))
    write_json(root / 'crossfit.json', {
        'folds': cfg.crossfit,
        'params': params,
        'methods': [tag for tag, _, _ in runs],
        'metadata': metadata(),
    })
    progress.complete_all()
    return 0


def _evaluate_runs(cfg, model, prepared, runs, progress):
    split = _explain_split(cfg, prepared)
    bconfig = make_config(prepared.train.features, cfg.steps, cfg.permutations, cfg.seed)
    inpainter = KdeInpainter(prepared.train.features)
    net = neuralize(model) if any(m in ('lrp', 'gi-neural') for _, m, _ in runs) else None
    summaries = []
    for tag, method, params in runs:
        explainer = build_explainer(method, model, bconfig, params, net)
        try:
            summaries.append(evaluate_method(model, split, explainer, inpainter,
                                             repeats=cfg.repeats, seed=cfg.seed,
                                             threads=cfg.threads, method=tag,
                                             progress=progress))
        except ExplainerError as e:
            progress.emit_error(f'evaluate:{tag}', str(e))
            raise
    return summaries


def _require_classifier(model, command):
    if model.kind == 'krr':
        raise IncompatibleMethodError(f"{command} is defined for classifiers, not KRR models")


def cmd_evaluate(cfg: RunConfig) -> int:
    model, training = load_model_document(cfg.model)
    _require_classifier(model, 'evaluate')
    family = 'knn' if model.kind == 'knn' else 'svm'
    defaults = [m for m, spec in Config.METHODS.items() if family in spec['model_kinds']]
    runs = _method_runs(cfg, model, defaults)
    prepared = _prepare(cfg, training, model)
    progress = create_progress_tracker()
    summaries = _evaluate_runs(cfg, model, prepared, runs, progress)

    out = cfg.out / 'evaluation'
    write_summary(out / 'summary.csv', summaries)
    for summary in summaries:
        write_curves(out / f'curves_{summary.method}.csv', summary)
    plot_flipping_curves(summaries, out / 'flipping_curves.svg')
    _summary_json(out / 'summary.json', summaries, model, model_hash(model),
                  {'repeats': cfg.repeats, 'seed': cfg.seed})
    progress.complete_all()
    return 0


def cmd_ablate(cfg: RunConfig) -> int:
    model, training = load_model_document(cfg.model)
    if model.kind != 'svm':
        raise IncompatibleMethodError(f"ablation needs an SVM model, got {model.kind}")
    cfg.methods = list(ABLATION_ARMS)
    runs = _method_runs(cfg, model, ABLATION_ARMS)
    prepared = _prepare(cfg, training, model)
    progress = create_progress_tracker()
    summaries = _evaluate_runs(cfg, model, prepared, runs, progress)

    out = cfg.out / 'ablation'
    write_summary(out / 'ablation.csv', summaries)
    for summary in summaries:
        write_curves(out / f'curves_{summary.method}.csv', summary)
    plot_ablation({f'γ={model.gamma:g}': summaries}, out / 'ablation.svg')
    _summary_json(out / 'ablation.json', summaries, model, model_hash(model),
                  {'repeats': cfg.repeats, 'seed': cfg.seed, 'arms': list(ABLATION_ARMS)})
    progress.complete_all()
    return 0


def cmd_surface(cfg: RunConfig) -> int:
    model, _ = load_model_document(cfg.model)
    if model.dim != 2:
        raise ConfigError(f"surface plots need a 2-D model, got d={model.dim}")
    net = neuralize(model)
    out = cfg.out / 'surface'
    xs, ys, F, G = plot_surface(model, net, out / 'surface.svg', cfg.resolution,
                                points=net.directions)
    off_boundary = np.abs(F) > 1e-9
    agree = np.sign(F[off_boundary]) == np.sign(G[off_boundary])
    gx, gy = np.meshgrid(xs, ys)
    pd.DataFrame({'x1': gx.ravel(), 'x2': gy.ravel(), 'f': F.ravel(), 'g': G.ravel()}).to_csv(
        out / 'surface.csv', index=False,
    )
    write_json(out / 'surface.json', {
        'resolution': cfg.resolution,
        'pixels': int(F.size),
        'sign_agreement': float(agree.mean()) if agree.size else 1.0,
        'model_hash': model_hash(model),
        'metadata': metadata(),
    })
    return 0


def cmd_neuralize(cfg: RunConfig) -> int:
    model, _ = load_model_document(cfg.model)
    net = neuralize(model)
    payload = {**net_to_dict(net), 'model_hash': model_hash(model)}
    if cfg.probes:
        points = net.directions
        rng = np.random.default_rng(cfg.seed)
        lo, hi = points.min(axis=0) - 1.0, points.max(axis=0) + 1.0
        probes = rng.uniform(lo, hi, size=(cfg.probes, model.dim))
        report = sign_equivalence_check(model, net, probes)
        payload['sign_check'] = {
            'n_probes': report.n_probes,
            'n_checked': report.n_checked,
            'mismatches': report.mismatches,
        }
    write_json(cfg.out / 'neural_model.json', payload)
    return 0


COMMANDS = {
    'train': cmd_train,
    'explain': cmd_explain,
    'evaluate': cmd_evaluate,
    'ablate': cmd_ablate,
    'surface': cmd_surface,
    'neuralize': cmd_neuralize,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    out = Path(args.out or Config.OUTPUT_FOLDER)
    log_dir = Config.LOG_DIR or str(out / 'logs')
    run_id = setup_run_logging(
        log_dir=log_dir,
        run_id=args.run_id,
        level=args.log_level or Config.LOG_LEVEL,
    )
    logger.info("explainer %s (run %s)", args.command, run_id)
    try:
        cfg = validate(args)
        cfg.out.mkdir(parents=True, exist_ok=True)
        return COMMANDS[cfg.command](cfg)
    except ExplainerError as e:
        logger.debug("Command failed", exc_info=True)
        logger.error("%s", e)
        return exit_code_for(e)
    except Exception:
        logger.exception("Unexpected failure in %s", args.command)
        return 1


if __name__ == '__main__':
    raise SystemExit(main())
