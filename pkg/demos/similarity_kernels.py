"""Pairwise tag similarity on a toy folksonomy.

Run with ``python3 demos/similarity_kernels.py``.
"""

from tagrec import build_index
from tagrec.folksonomy import Folksonomy
from tagrec.similarity import DAY_MS, SimParams, jaccard, levenshtein, sim_lev, sim_time
from tagrec.graph import edge_weight

# Four tags on five bookmarks. "recipe" and "recipes" never share a bookmark,
# "cooking" and "recipe" share two, one of them tagged months apart.
tags = {1: "recipe", 2: "recipes", 3: "cooking", 4: "python"}
rows = [
    (1, 1, 10, 0), (1, 3, 10, 2 * DAY_MS),
    (2, 1, 11, 0), (2, 3, 11, 120 * DAY_MS),
    (3, 2, 12, 0), (3, 4, 13, 0), (1, 3, 14, 0),
]
idx = build_index(Folksonomy.from_assignments(rows, tags))

# %% co-occurrence: shared bookmarks over all bookmarks of either tag
print("jaccard(recipe, cooking) =", jaccard(1, 3, idx))

# %% lexical closeness: edit distance scaled by the longer string
print("levenshtein(recipe, recipes) =", levenshtein("recipe", "recipes"))
print("sim_lev(recipe, recipes)     = %.4f" % sim_lev("recipe", "recipes"))
print("sim_lev(kitten, sitting)     = %.4f" % sim_lev("kitten", "sitting"))

# %% time agreement: share of common bookmarks tagged within tau of each other
for days in (1, 7, 365):
    print(f"sim_time(recipe, cooking, tau={days}d) =", sim_time(1, 3, idx, days * DAY_MS))

# %% edge weights combine the three
p = SimParams(tau=7 * DAY_MS, lam=0.5)
for a, b in [(1, 3), (1, 2), (3, 4)]:
    print(f"w({tags[a]}, {tags[b]}) = {edge_weight(a, b, idx, p):.4f}")

# without the time term the co-occurring weight is the plain similarity
print("time off: w(recipe, cooking) =", edge_weight(1, 3, idx, SimParams(use_time=False)))
