"""Recommend bookmarks from tag communities and score the three variants.

Run with ``python3 demos/recommend_and_evaluate.py``.
"""

import numpy as np

from tagrec import build_graph, build_index, louvain
from tagrec.evaluation import VARIANTS, ablation_violations, compare, run_experiment
from tagrec.folksonomy import Folksonomy
from tagrec.ingest import SplitSpec, split
from tagrec.recommender import Recommender, build_membership_table, ellenberg, prune
from tagrec.similarity import SimParams
from tagrec.synthetic import planted_folksonomy

f = planted_folksonomy(n_users=80, n_resources=500, n_tags=250, n_assignments=8000, seed=3)
# planted topics keep every resource inside one topic; add off-topic noise
rng = np.random.default_rng(3)
noise = zip(*(rng.integers(1, n + 1, size=600).tolist() for n in (80, 250, 500)),
            rng.integers(0, 10**12, size=600).tolist())
f = Folksonomy.from_assignments([*f.assignments, *noise], f.tags)
train, test = split(f, SplitSpec(train_fraction=0.8, seed=3))
print(f"train {len(train.assignments)} / test {len(test.assignments)} assignments")

# %% memberships: each resource spreads over the communities of its tags
idx = build_index(train)
part = louvain(build_graph(idx, SimParams()), seed=0)
full = build_membership_table(part, idx)
table = prune(full, 0.1)
r = max(full.prob, key=lambda r: len(full.prob[r]))
print(f"resource {r} memberships:", {c: round(p, 3) for c, p in full.prob[r].items()})
print("  after pruning below 0.1:", {c: round(p, 3) for c, p in table.prob.get(r, {}).items()})
other = next(x for x in table.prob if x != r and table.prob[x].keys() & table.prob[r].keys())
print(f"ellenberg({r}, {other}) = {ellenberg(r, other, table):.4f}")

# %% a top-5 list for one user
rec = Recommender(part, table, idx)
user = sorted(train.users)[0]
print(f"user {user} top-5:", [(r, round(s, 3)) for r, s in rec.recommend(user, 5).items])

# %% the three variants on the same split
reports = [run_experiment(v, train, test, SimParams(), prune_threshold=0.1, k_values=(5, 10))
           for v in VARIANTS]
print()
print(compare(reports).to_text())
issues = ablation_violations(reports)
print("ordering CDR_TIME >= LEXSEM_CDR >= SEM_CDR:", "holds" if not issues else issues)
