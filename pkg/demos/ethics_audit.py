"""
Auditing models for fairness, privacy and causal consistency
===========================================================

Audit one model at a time, then explore the Rashomon set of near-optimal
models and pick the one that is fairest among the accurate ones.
"""

from glassbox.causal import Gaussian, LinearAdditive, ScmModel, StructuralEquation, causal_consistency
from glassbox.data import add_demographics, add_label_noise, binary_sensitive, generate_covid_toy, split
from glassbox.fairness import audit_fairness, verify_fairness
from glassbox.models import encode_instances, fit_model, predict_ids
from glassbox.privacy import anonymity_report, membership_inference, verify_privacy
from glassbox.rashomon import annotate_ethics, default_space, enumerate_and_fit, pareto_front, rashomon_set, select

# noisy labels make memorization visible; demographics add a sensitive column and quasi-identifiers
data = add_demographics(add_label_noise(generate_covid_toy(600, seed=1), 0.1, seed=1), seed=1)
train, test = split(data, 0.6, seed=1)

# group fairness with respect to Sex, "F" being the protected value
tree = fit_model("tree", train, max_depth=3)
s = binary_sensitive(test, "Sex")
report = audit_fairness(test.label_ids()[0], predict_ids(tree, encode_instances(tree, test)), s)
print(report.gaps(), "delta", round(report.delta, 3), "pass", verify_fairness(report, 0.1))

# anonymity of the released table over its quasi-identifiers
print(anonymity_report(data, ["AgeBand", "Zip3"], "Sex"))

# membership inference: a 1-NN model memorizes its training rows, a shallow tree does not
for family, hp in [("knn", {"k": 1}), ("tree", {"max_depth": 1})]:
    f = fit_model(family, train, **hp)
    attack = membership_inference(f, train, test, shadows=4, seed=1)
    print(family, "Pi", round(attack.pi, 3), "private", verify_privacy(attack, 0.55))

# a postulated causal graph: CO level causes Covid, lung capacity is a side effect of it
scm = ScmModel((
    StructuralEquation("COLevel", (), LinearAdditive(), Gaussian(4.2, 1.3)),
    StructuralEquation("Covid", ("COLevel",), LinearAdditive((("COLevel", 1.0),), -4.2), Gaussian(0.0, 1.0)),
    StructuralEquation("LungCapacity", ("Covid",), LinearAdditive((("Covid", -0.8),), 3.9), Gaussian(0.0, 0.6)),
))
ok, rep = causal_consistency(tree, scm, "Covid")
for fs in rep.features:
    print(fs.feature, "ancestor" if fs.ancestor else "non-ancestor", round(fs.sensitivity, 3))
print("causally consistent:", ok)

# the Rashomon set: every candidate within 0.03 of the best held-out error
cards = enumerate_and_fit(default_space(), train, test, seed=1)
rs = annotate_ethics(rashomon_set(cards, 0.03), test, sensitive="Sex", train=train, seed=1)
print(len(rs.members), "of", rs.space_size, "models are near-optimal")
best = select(rs, ["delta", "complexity", "loss"])
print("fairest simple model:", best.family, best.hyperparams, "loss", best.loss, "delta", best.delta)
for c in pareto_front(list(rs.members), ["loss", "delta", "pi"]):
    print(c.model_id, c.family, c.loss, round(c.delta, 3), c.pi)
