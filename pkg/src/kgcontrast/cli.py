"""``kgcontrast`` command-line entry point.

Exit status: 0 on success, 2 for configuration errors, 3 for data errors,
4 for numeric failures and 5 for checkpoint or other I/O failures.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys

from . import __version__
from .checkpoint import load_checkpoint
from .config import FIELD_TYPES, PRESETS, TrainConfig, load_config
from .data import KINDS, TripleStore, save_vocab
from .errors import CheckpointError, ConfigError, DataError, KGError
from .evaluate import evaluate, export_couples, sparsity_sweep, sweep_records, sweep_table

log = logging.getLogger("kgcontrast")

HELP = {
    "model": "scoring model: rescal or complex",
    "dim": "embedding dimension d",
    "batch_size": "anchor triples per batch",
    "epochs": "training epochs",
    "learning_rate": "Adagrad learning rate",
    "reg_weight": "DURA weight (default: 0.1 for rescal, 0.05 for complex)",
    "tau": "contrastive temperature",
    "alpha_h": "weight of the head-entity contrastive term",
    "alpha_t": "weight of the tail-entity contrastive term",
    "alpha_hr": "weight of the (head, relation) couple term",
    "alpha_tr": "weight of the (relation, tail) couple term",
    "init_scale": "std of the normal initialisation",
    "seed": "random seed",
    "valid_every": "epochs between validation passes",
    "reciprocals": "train with reciprocal relations (true/false)",
    "dataset": "dataset directory with train/valid/test files",
    "checkpoint": "best-model checkpoint path (the latest state goes to <path>.last)",
    "log": "JSON-lines training log path",
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(f"{self.prog}: {message}")


def _flag(name):
    return "--" + name.replace("_", "-")


def _add_train_flags(p):
    p.add_argument("--config", help="key=value config file; flags override it")
    p.add_argument("--preset", choices=sorted(PRESETS), help="start from a per-dataset preset")
    p.add_argument("--resume", help="continue from a .last checkpoint")
    for f in dataclasses.fields(TrainConfig):
        # values stay strings here and are converted with the file values
        p.add_argument(_flag(f.name), dest=f.name, metavar=FIELD_TYPES[f.name].__name__.upper(),
                       help=HELP[f.name])


def _add_eval_flags(p):
    p.add_argument("--checkpoint", required=True, help="checkpoint file")
    p.add_argument("--dataset", help="dataset directory (default: the one recorded in the checkpoint)")
    p.add_argument("--split", default="test", choices=["valid", "test"])
    p.add_argument("--threads", type=int, default=1, help="evaluation threads")
    p.add_argument("--json", action="store_true", help="print machine-readable JSON")


def build_parser():
    parser = _Parser(prog="kgcontrast", description="Contrastive training and evaluation of bilinear KG models.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("prepare", help="write frozen vocabularies and print dataset statistics")
    p.add_argument("dataset", help="dataset directory")
    p.add_argument("--json", action="store_true")

    _add_train_flags(sub.add_parser("train", help="train a model"))

    _add_eval_flags(sub.add_parser("eval", help="filtered MRR and Hits@{1,3,10}"))
    _add_eval_flags(sub.add_parser("analyze-relations", help="per-relation breakdown"))

    p = sub.add_parser("sparsity-sweep", help="zero the smallest entity entries and re-evaluate")
    _add_eval_flags(p)
    p.add_argument("--keep", required=True, help="comma-separated keep fractions, e.g. 1.0,0.5,0.1")

    p = sub.add_parser("export-couples", help="write couple representations as CSV")
    _add_eval_flags(p)
    p.add_argument("--which", required=True, choices=["hr", "rt"])
    p.add_argument("--out", required=True, help="output CSV path")
    return parser


def _check_threads(args):
    if args.threads < 1:
        raise ConfigError(f"--threads must be >= 1, got {args.threads}")


def cmd_prepare(args):
    store = TripleStore.from_directory(args.dataset, reciprocals=False)
    save_vocab(store, args.dataset)
    stats = store.stats()
    n = len(store.train)
    stats["positives"] = {k: float((store.index(k).group_sizes() > 1).sum() / n) for k in KINDS}
    if args.json:
        print(json.dumps(stats, indent=1))
        return 0
    print(f"{'entities':<12}{stats['entities']:>10,}")
    print(f"{'relations':<12}{stats['relations']:>10,}")
    for s in ("train", "valid", "test"):
        print(f"{s:<12}{stats[s]:>10,}")
    print("train triples with a non-self positive:")
    for k in KINDS:
        print(f"  {k:<10}{stats['positives'][k]:>9.4f}")
    return 0


def cmd_train(args):
    from .trainer import fit

    overrides = {f.name: getattr(args, f.name) for f in dataclasses.fields(TrainConfig)}
    cfg = load_config(args.config, overrides, args.preset)
    if not cfg.dataset:
        raise ConfigError("no dataset given (--dataset or dataset= in the config file)")
    print("# effective config")
    print(cfg.to_text(), end="", flush=True)
    store = TripleStore.from_directory(cfg.dataset, reciprocals=cfg.reciprocals)
    log.info("dataset %s", store.stats())

    def on_epoch(rec):
        extra = f" valid_mrr={rec['valid_mrr']:.4f}" if "valid_mrr" in rec else ""
        print(f"epoch {rec['epoch']:>4}  total={rec['total']:.4f}  l_s={rec['l_s']:.4f}{extra}", flush=True)

    res = fit(cfg, store, resume=args.resume, on_epoch=on_epoch)
    print(f"best epoch {res.state.best_epoch}  valid_mrr={res.state.best_mrr:.4f}")
    return 0


def _load_for_eval(args):
    _check_threads(args)
    ck = load_checkpoint(args.checkpoint)
    dataset = args.dataset or ck.config.get("dataset")
    if not dataset:
        raise ConfigError("no dataset given and none recorded in the checkpoint")
    reciprocals = ck.meta.get("reciprocals", ck.config.get("reciprocals", False))
    store = TripleStore.from_directory(dataset, reciprocals=bool(reciprocals))
    if ck.vocab_digest != store.vocab_digest():
        raise DataError(f"{args.checkpoint}: vocabulary digest does not match {dataset}")
    if ck.params.n_entities != store.n_entities or ck.params.n_relations != store.n_relations:
        raise DataError(f"{args.checkpoint}: parameter shapes do not match {dataset}")
    return ck, store


def cmd_eval(args, per_relation=False):
    ck, store = _load_for_eval(args)
    rep = evaluate(ck.params, store, args.split, args.threads)
    if args.json:
        print(rep.to_json())
    else:
        print(rep.table(per_relation=per_relation))
    return 0


def _keep_fractions(text):
    try:
        out = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise ConfigError(f"--keep expects comma-separated numbers, got {text!r}") from None
    if not out or any(not 0.0 <= f <= 1.0 for f in out):
        raise ConfigError("--keep fractions must lie in [0, 1]")
    return out


def cmd_sweep(args):
    fractions = _keep_fractions(args.keep)
    ck, store = _load_for_eval(args)
    results = sparsity_sweep(ck.params, store, fractions, args.split, args.threads)
    if args.json:
        print(json.dumps(sweep_records(results), indent=1))
    else:
        print("masking: proportion of entity-table entries with the smallest magnitude")
        print(sweep_table(results))
    return 0


def cmd_export(args):
    ck, store = _load_for_eval(args)
    n = export_couples(ck.params, store, store.splits[args.split], args.which, args.out)
    print(f"wrote {n} {args.which} couples to {args.out}")
    return 0


def run(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "prepare":
        return cmd_prepare(args)
    if args.command == "train":
        return cmd_train(args)
    if args.command == "eval":
        return cmd_eval(args)
    if args.command == "analyze-relations":
        return cmd_eval(args, per_relation=True)
    if args.command == "sparsity-sweep":
        return cmd_sweep(args)
    return cmd_export(args)


def main(argv=None):
    try:
        return run(argv)
    except KGError as e:
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return CheckpointError.exit_code


if __name__ == "__main__":
    sys.exit(main())
