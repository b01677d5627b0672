"""Command-line entry point: ``glassbox {synth,fit,explain,audit,rashomon}``.

Exit codes: 0 success (all requested verifications pass), 1 a verification
failed, 2 usage or data error. Every command writes ``config.json`` (the
resolved arguments minus ``--out`` and ``--jobs``) next to its outputs, and
all outputs are byte-identical for identical arguments.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import worked_examples
from .causal import causal_consistency, load_scm
from .data import (Dataset, IngestionError, add_demographics, add_label_noise, binary_sensitive, covid_schema,
                   generate_covid_toy, load_csv, load_schema, save_schema, split)
from .explain import (CaseExplanation, FeatureAttribution, RuleExplanation, UnsupportedExplanationError,
                      complexity, explain_prediction, global_importance)
from .fairness import METRICS as FAIRNESS_METRICS
from .fairness import UndefinedMetricError, audit_fairness, verify_fairness
from .models.base import (FAMILIES, UnsupportedTaskError, encode_instances, fit_model, load_model, model_to_dict,
                          predict, predict_ids, save_model)
from .models.rules import Condition
from .privacy import anonymity_report, membership_inference, verify_privacy
from .rashomon import (CRITERIA, annotate_ethics, default_space, enumerate_and_fit, load_space, pareto_front,
                       rashomon_set, select)

OUT_ENV = "GLASSBOX_OUT"
DEFAULT_OUT = "glassbox-out"
# arguments that change where or how fast a run happens, not what it produces
_NOT_ECHOED = ("out", "jobs", "handler")


class UsageError(Exception):
    pass


# ---- output helpers ------------------------------------------------------

def _dump(obj) -> str:
    return json.dumps(obj, indent=1, sort_keys=True) + "\n"


def _write(out: Path, name: str, text: str):
    (out / name).write_text(text, encoding="utf-8")


def _fmt(v) -> str:
    if v is None:
        return "-"
    if isinstance(v, bool):
        return "yes" if v else "no"
    if isinstance(v, float):
        return f"{v + 0.0:.6g}"
    return str(v)


def table(headers, rows) -> str:
    cells = [[str(h) for h in headers]] + [[_fmt(v) for v in r] for r in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(headers))]
    lines = ["  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in cells]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


def _outdir(args) -> Path:
    out = Path(args.out or os.environ.get(OUT_ENV) or DEFAULT_OUT)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise UsageError(f"cannot create output directory {out}: {exc}") from None
    return out


def _echo_config(out: Path, args):
    cfg = {k: v for k, v in vars(args).items() if k not in _NOT_ECHOED}
    _write(out, "config.json", _dump(cfg))


def _emit(out: Path, stem: str, text: str):
    _write(out, stem + ".txt", text)
    sys.stdout.write(text)


def _load_data(args, csv_attr="data") -> Dataset:
    path = getattr(args, csv_attr)
    if path is None:
        raise UsageError(f"--{csv_attr.replace('_', '-')} is required")
    if args.schema is None:
        raise UsageError("--schema is required")
    try:
        return load_csv(path, load_schema(args.schema))
    except OSError as exc:
        raise UsageError(f"cannot read {exc.filename}: {exc.strerror}") from None


def _params(pairs) -> dict:
    out = {}
    for p in pairs or ():
        if "=" not in p:
            raise UsageError(f"--param expects key=value, got {p!r}")
        k, v = p.split("=", 1)
        try:
            out[k] = json.loads(v)
        except json.JSONDecodeError:
            out[k] = v
    return out


def _csv_list(s):
    return [v.strip() for v in s.split(",") if v.strip()] if s else []


# ---- synth ---------------------------------------------------------------

def cmd_synth(args) -> int:
    out = _outdir(args)
    d = generate_covid_toy(args.n, args.seed)
    if args.label_noise:
        d = add_label_noise(d, args.label_noise, args.seed)
    if args.demographics:
        d = add_demographics(d, args.seed)
    d.to_csv(out / "data.csv")
    save_schema(d.schema if args.demographics else covid_schema(), out / "schema.json")
    if args.worked_models:
        save_model(worked_examples.tree_model(), out / "worked_tree.json")
        save_model(worked_examples.rule_model(), out / "worked_rules.json")
        save_model(worked_examples.knn_wrapped(), out / "worked_knn.json")
    _echo_config(out, args)
    _emit(out, "synth", f"wrote {d.n} rows to {out / 'data.csv'}\n")
    return 0


# ---- fit -----------------------------------------------------------------

def _global_payload(model):
    e = model.estimator
    if model.family in ("logistic", "linear", "gam"):
        return global_importance(model).to_dict()
    if model.family == "rules":
        return {"kind": "rules", "default": model.classes[e.default],
                "rules": [r.describe(model.feature_names, model.classes) for r in e.rules]}
    if model.family == "tree":
        return {"kind": "tree", "depth": e.depth, "leaves": e.n_leaves,
                "rules": _tree_rules(model)}
    return {"kind": "cases", "memory": len(e.memory_X), "k": e.k, "metric": e.metric}


def _tree_rules(model):
    t, out = model.estimator, []

    def walk(i, conds):
        nd = t.nodes[i]
        if nd.is_leaf:
            lhs = " and ".join(c.describe(model.feature_names) for c in conds) or "always"
            out.append(f"if {lhs} -> {model.classes[nd.label]}")
            return
        walk(nd.left, conds + [Condition(nd.feature, "<=", nd.threshold)])
        walk(nd.right, conds + [Condition(nd.feature, ">", nd.threshold)])

    walk(t.root, [])
    return out


def cmd_fit(args) -> int:
    d = _load_data(args)
    out = _outdir(args)
    model = fit_model(args.family, d, **_params(args.param))
    save_model(model, out / "model.json")
    cx = complexity(model)
    payload = _global_payload(model)
    _write(out, "explanation.json", _dump(payload))
    _write(out, "complexity.json", _dump(cx.to_dict()))
    X = encode_instances(model, d)
    lines = [f"family: {model.family}", f"features: {', '.join(model.feature_names)}"]
    if model.is_classifier:
        acc = float(np.mean(predict_ids(model, X) == d.label_ids()[0]))
        lines.append(f"training accuracy: {acc:.6g}")
    text = "\n".join(lines) + "\n\n"
    if payload.get("kind") == "attribution":
        text += table(["term", "weight"], payload["contributions"])
        text += f"intercept: {_fmt(payload['intercept'])}\n"
    elif "rules" in payload:
        text += "".join(r + "\n" for r in payload["rules"])
    text += "\n" + table(["measure", "value"], [["global", cx.global_], ["local bound", cx.bound]]
                         + [[k, v] for k, v in sorted(cx.detail.items())])
    _echo_config(out, args)
    _emit(out, "report", text)
    return 0


# ---- explain -------------------------------------------------------------

def _instance(args, model) -> np.ndarray:
    if args.instance is not None:
        try:
            x = np.array([float(v) for v in args.instance.split(",")])
        except ValueError:
            raise UsageError(f"--instance must be comma-separated numbers, got {args.instance!r}") from None
    elif args.row is not None:
        d = _load_data(args)
        if not 0 <= args.row < d.n:
            raise UsageError(f"--row {args.row} out of range for {d.n} rows")
        x = encode_instances(model, d.take([args.row]))[0]
    else:
        raise UsageError("give --instance or --data/--schema/--row")
    if len(x) != model.m:
        raise UsageError(f"instance has {len(x)} values, model expects {model.m} ({', '.join(model.feature_names)})")
    return x


def _render_explanation(model, x, ex) -> str:
    pred = predict(model, x)
    head = f"prediction: {pred.label if model.is_classifier else _fmt(pred.value)}\n"
    if isinstance(ex, FeatureAttribution):
        scale = " (logit scale)" if ex.link == "logistic" else ""
        rows = [[n, xv, v] for (n, v), xv in zip(ex.contributions, list(x) + [None] * len(ex.contributions))]
        if model.family == "gam":
            rows = [[n, None, v] for n, v in ex.contributions]
        return (head + table(["feature", "value", "contribution" + scale], rows)
                + f"intercept: {_fmt(ex.intercept)}\nscore: {_fmt(ex.total)}\n")
    if isinstance(ex, RuleExplanation):
        kind = "path" if ex.source == "tree" else f"covering rules: {ex.covering}"
        return head + kind + "\n" + "".join(f"  {line}\n" for line in ex.describe())
    assert isinstance(ex, CaseExplanation)
    rows = [[c.index, ", ".join(_fmt(v) for v in c.instance), c.label, round(c.distance, 4)] for c in ex.cases]
    tally = ", ".join(f"{k}: {v}" for k, v in ex.tally.items())
    return head + table(["memory", "instance", "label", f"{ex.metric} distance"], rows) + f"votes: {tally}\n"


def cmd_explain(args) -> int:
    model = _load_model(args.model)
    x = _instance(args, model)
    out = _outdir(args)
    ex = explain_prediction(model, x)
    cx = complexity(model, x)
    _write(out, "explanation.json", _dump({"instance": list(map(float, x)), "explanation": ex.to_dict(),
                                           "complexity": cx.to_dict()}))
    text = _render_explanation(model, x, ex) + f"complexity: local {_fmt(cx.local)}, global {_fmt(cx.global_)}\n"
    _echo_config(out, args)
    _emit(out, "explanation", text)
    return 0


def _load_model(path):
    if path is None:
        raise UsageError("--model is required")
    try:
        return load_model(path)
    except OSError as exc:
        raise UsageError(f"cannot read {exc.filename}: {exc.strerror}") from None
    except (KeyError, json.JSONDecodeError) as exc:
        raise UsageError(f"malformed model file {path}: {exc}") from None


# ---- audit ---------------------------------------------------------------

def _predictions_file(path):
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.DictReader(fh))
    except OSError as exc:
        raise UsageError(f"cannot read {exc.filename}: {exc.strerror}") from None
    if not rows or not {"y", "yhat", "s"} <= set(rows[0]):
        raise UsageError("predictions file needs columns y, yhat, s (and optionally r)")
    try:
        y, yhat, s = (np.array([int(float(r[c])) for r in rows]) for c in ("y", "yhat", "s"))
    except ValueError as exc:
        raise UsageError(f"predictions file: {exc}") from None
    r = np.array([row["r"] for row in rows]) if "r" in rows[0] else None
    return y, yhat, s, r


def cmd_audit(args) -> int:
    if not (args.fairness or args.privacy or args.anonymity or args.causal):
        raise UsageError("select at least one of --fairness, --privacy, --anonymity, --causal")
    out = _outdir(args)
    verdicts, report, text = {}, {}, ""
    model = d = None
    needs_model = args.privacy or args.causal or (args.fairness and args.predictions is None)
    if needs_model:
        model = _load_model(args.model)
    if args.privacy or args.anonymity or (args.fairness and args.predictions is None):
        d = _load_data(args)

    if args.fairness:
        metrics = _csv_list(args.metrics) or None
        if args.predictions is not None:
            y, yhat, s, r = _predictions_file(args.predictions)
        else:
            sens = args.sensitive or next(iter(d.schema.with_role("sensitive")), None)
            if sens is None:
                raise UsageError("fairness audit needs --sensitive (or a column with the sensitive role)")
            if sens not in d.schema.names:
                raise UsageError(f"unknown sensitive column {sens!r}")
            s = binary_sensitive(d, sens, args.protected)
            y = d.label_ids()[0]
            yhat = predict_ids(model, encode_instances(model, d))
            r = d[args.resolving] if args.resolving else None
        fr = audit_fairness(y, yhat, s, r, metrics)
        ok = verify_fairness(fr, args.fairness_tau)
        verdicts["fairness"] = ok
        report["fairness"] = fr.to_dict()
        rows = [[k, v] for k, v in fr.gaps().items()]
        text += "fairness\n" + table(["metric", "gap (protected - reference)"], rows)
        if fr.csd is not None:
            text += table(["stratum", "disparity"], list(fr.csd.strata))
        for m, why in fr.undefined:
            text += f"undefined {m}: {why}\n"
        text += f"delta {_fmt(fr.delta)} <= tau {_fmt(args.fairness_tau)}: {'pass' if ok else 'fail'}\n\n"

    if args.privacy:
        if args.holdout is None:
            raise UsageError("privacy audit needs --holdout (records not used for training)")
        holdout = _load_data(args, "holdout")
        att = membership_inference(model, d, holdout, args.shadows, args.seed, args.jobs)
        ok = verify_privacy(att, args.privacy_tau)
        verdicts["privacy"] = ok
        report["privacy"] = att.to_dict()
        text += "membership inference\n" + table(["field", "value"], sorted(att.to_dict().items()))
        text += f"pi {_fmt(att.pi)} <= tau {_fmt(args.privacy_tau)}: {'pass' if ok else 'fail'}\n\n"

    if args.anonymity:
        qi = _csv_list(args.qi) or d.schema.with_role("quasi_identifier")
        if not qi:
            raise UsageError("anonymity audit needs --qi (or quasi-identifier columns in the schema)")
        sens = args.sensitive or next(iter(d.schema.with_role("sensitive")), None)
        ar = anonymity_report(d, qi, sens)
        report["anonymity"] = ar.to_dict()
        text += "anonymity (quasi-identifiers: " + ", ".join(qi) + ")\n"
        text += table(["measure", "value"], [["k", ar.k], ["l", ar.l], ["t", ar.t], ["groups", ar.groups]])
        if args.k_min is not None:
            ok = ar.k >= args.k_min
            verdicts["anonymity"] = ok
            text += f"k {ar.k} >= {args.k_min}: {'pass' if ok else 'fail'}\n"
        text += "\n"

    if args.causal:
        if args.scm is None or args.target is None:
            raise UsageError("causal audit needs --scm and --target")
        try:
            scm = load_scm(args.scm)
        except OSError as exc:
            raise UsageError(f"cannot read {exc.filename}: {exc.strerror}") from None
        ok, cr = causal_consistency(model, scm, args.target, n=args.causal_n, seed=args.seed, tol=args.tol)
        verdicts["causal"] = ok
        report["causal"] = cr.to_dict()
        text += f"causal consistency (target {args.target})\n"
        text += table(["feature", "ancestor", "sensitivity", "violates"],
                      [[f.feature, f.ancestor, f.sensitivity, f.violates] for f in cr.features])
        text += f"indicator: {'pass' if ok else 'fail'}\n\n"

    report["verdicts"] = verdicts
    _write(out, "audit.json", _dump(report))
    _echo_config(out, args)
    _emit(out, "audit", text)
    return 0 if all(verdicts.values()) else 1


# ---- rashomon ------------------------------------------------------------

def _card_rows(cards):
    return [[c.model_id, c.family, json.dumps(c.hyperparams, sort_keys=True), c.loss, c.complexity, c.delta,
             c.pi, c.causal] for c in cards]


CARD_HEADERS = ["id", "family", "hyperparams", "loss", "complexity", "delta", "pi", "causal"]


def cmd_rashomon(args) -> int:
    d = _load_data(args)
    try:
        space = load_space(args.space) if args.space else default_space()
    except OSError as exc:
        raise UsageError(f"cannot read {exc.filename}: {exc.strerror}") from None
    if space.size == 0:
        raise UsageError("the hypothesis space is empty")
    policy = _csv_list(args.policy) or ["loss"]
    bad = [p for p in policy if p not in CRITERIA]
    if bad:
        raise UsageError(f"unknown policy criteria {bad}; choose from {', '.join(CRITERIA)}")
    out = _outdir(args)
    train, ev = split(d, args.train_fraction, args.seed)
    cards = enumerate_and_fit(space, train, ev, args.seed, args.jobs)
    rs = rashomon_set(cards, args.epsilon, args.loss_on)
    scm = load_scm(args.scm) if args.scm else None
    if args.sensitive or args.privacy or scm is not None:
        rs = annotate_ethics(rs, ev, args.sensitive, args.protected, train if args.privacy else None,
                             args.shadows, scm, args.target, args.seed, args.jobs)
    chosen = select(rs, policy)
    front = pareto_front(list(rs.members), policy)
    _write(out, "cards.json", _dump([c.to_dict() for c in cards]))
    _write(out, "rashomon.json", _dump(rs.to_dict()))
    _write(out, "pareto.json", _dump([c.to_dict() for c in front]))
    _write(out, "selected.json", _dump(chosen.to_dict()))
    save_model(chosen.model, out / "selected_model.json")
    if args.save_models:
        mdir = out / "members"
        mdir.mkdir(exist_ok=True)
        for c in rs.members:
            _write(mdir, f"model_{c.model_id:03d}.json", _dump(model_to_dict(c.model)))
    text = (f"candidates: {len(cards)} ({len(rs.failed)} failed)\n"
            f"best {args.loss_on} loss: {_fmt(rs.reference_loss)}; epsilon {_fmt(rs.epsilon)}; "
            f"members {len(rs.members)}; ratio {_fmt(rs.ratio)}\n\n"
            + "all candidates\n" + table(CARD_HEADERS, _card_rows(cards))
            + "\nRashomon set\n" + table(CARD_HEADERS, _card_rows(rs.members))
            + f"\nPareto front over ({', '.join(policy)})\n" + table(CARD_HEADERS, _card_rows(front))
            + f"\nselected by ({', '.join(policy)}): model {chosen.model_id} ({chosen.family})\n")
    _echo_config(out, args)
    _emit(out, "rashomon", text)
    return 0


# ---- argument parsing ----------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help=f"output directory (default: ${OUT_ENV} or ./{DEFAULT_OUT})")
    common.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    common.add_argument("--jobs", type=int, default=1, help="parallel workers; results do not depend on it")

    data = argparse.ArgumentParser(add_help=False)
    data.add_argument("--data", help="CSV file")
    data.add_argument("--schema", help="schema JSON file")

    p = argparse.ArgumentParser(prog="glassbox", description="Fit, explain and audit interpretable models.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("synth", parents=[common], help="write the synthetic Covid dataset and schema")
    s.add_argument("--n", type=int, default=200)
    s.add_argument("--label-noise", type=float, default=0.0, help="fraction of labels to flip")
    s.add_argument("--demographics", action="store_true", help="add Sex, AgeBand, Zip3 columns")
    s.add_argument("--worked-models", action="store_true",
                   help="also write the hand-built tree, rule and k-NN example models")
    s.set_defaults(handler=cmd_synth)

    f = sub.add_parser("fit", parents=[common, data], help="fit one model family")
    f.add_argument("--family", required=True, choices=FAMILIES)
    f.add_argument("--param", action="append", metavar="KEY=VALUE", help="hyperparameter (JSON value)")
    f.set_defaults(handler=cmd_fit)

    e = sub.add_parser("explain", parents=[common, data], help="explain one prediction")
    e.add_argument("--model", required=True)
    e.add_argument("--instance", help="comma-separated encoded feature values")
    e.add_argument("--row", type=int, help="row index of --data to explain")
    e.set_defaults(handler=cmd_explain)

    a = sub.add_parser("audit", parents=[common, data], help="fairness, privacy, anonymity and causal audits")
    a.add_argument("--model")
    a.add_argument("--fairness", action="store_true")
    a.add_argument("--predictions", help="CSV with columns y, yhat, s[, r] instead of --model/--data")
    a.add_argument("--sensitive", help="binary sensitive column")
    a.add_argument("--protected", help="protected value of the sensitive column")
    a.add_argument("--resolving", help="resolving column for conditional disparity")
    a.add_argument("--metrics", help=f"comma-separated subset of {','.join(FAIRNESS_METRICS)}")
    a.add_argument("--fairness-tau", type=float, default=0.1)
    a.add_argument("--privacy", action="store_true")
    a.add_argument("--holdout", help="CSV of records not used to train the model")
    a.add_argument("--shadows", type=int, default=4)
    a.add_argument("--privacy-tau", type=float, default=0.5)
    a.add_argument("--anonymity", action="store_true")
    a.add_argument("--qi", help="comma-separated quasi-identifier columns")
    a.add_argument("--k-min", type=int, help="fail unless k-anonymity reaches this value")
    a.add_argument("--causal", action="store_true")
    a.add_argument("--scm", help="SCM description JSON")
    a.add_argument("--target", help="SCM variable the model predicts")
    a.add_argument("--tol", type=float, default=1e-6)
    a.add_argument("--causal-n", type=int, default=2000, help="samples per intervention")
    a.set_defaults(handler=cmd_audit)

    r = sub.add_parser("rashomon", parents=[common, data], help="explore the Rashomon set of a hypothesis space")
    r.add_argument("--space", help="hypothesis space JSON (default: built-in 24-candidate grid)")
    r.add_argument("--epsilon", type=float, default=0.05)
    r.add_argument("--train-fraction", type=float, default=0.7)
    r.add_argument("--loss-on", choices=("eval", "train"), default="eval")
    r.add_argument("--policy", default="loss,complexity", help=f"ordered criteria from {','.join(CRITERIA)}")
    r.add_argument("--sensitive")
    r.add_argument("--protected")
    r.add_argument("--privacy", action="store_true", help="annotate membership-inference risk")
    r.add_argument("--shadows", type=int, default=4)
    r.add_argument("--scm")
    r.add_argument("--target")
    r.add_argument("--save-models", action="store_true")
    r.set_defaults(handler=cmd_rashomon)
    return p


def _glue_instance(argv: list) -> list:
    # "--instance -1.5,2" would read the value as an option; bind it explicitly
    out, i = [], 0
    while i < len(argv):
        if argv[i] == "--instance" and i + 1 < len(argv) and argv[i + 1].startswith("-"):
            out.append(f"--instance={argv[i + 1]}")
            i += 2
        else:
            out.append(argv[i])
            i += 1
    return out


def main(argv=None) -> int:
    parser = build_parser()
    argv = _glue_instance(list(sys.argv[1:] if argv is None else argv))
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    try:
        return args.handler(args)
    except (UsageError, IngestionError, UnsupportedTaskError, UnsupportedExplanationError,
            UndefinedMetricError, ValueError) as exc:
        print(f"glassbox {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
