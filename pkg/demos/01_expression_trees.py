"""Expression trees: parse, evaluate, expand, and split into additive effects.

Everything downstream (models, ground truth, generation) is built on these
trees, so this walk-through starts at the bottom.
"""

import numpy as np

from addeval import (
    DomainViolation,
    count_nonlinearities,
    decompose_additive,
    evaluate,
    expand,
    parse_text,
    signature_of,
    to_text,
)

# --- parse and evaluate ----------------------------------------------------
# The text grammar is ordinary infix math over features x1..xd.
expr = parse_text("x1 + exp(x4) + log(x1 * x4) + x4 / x1")
print("parsed:", to_text(expr))

# Evaluation is vectorized: one row per sample, one column per feature.
X = np.array([
    [1.0, 0.0, 0.0, 1.0],
    [2.0, 0.0, 0.0, 0.5],
    [0.5, 0.0, 0.0, 2.0],
])
print("values:", evaluate(expr, X))          # row 0 gives 2 + e

# Partial-domain operators raise instead of silently producing NaN; the
# error names the operator and the first offending row.
try:
    evaluate(expr, np.array([[-1.0, 0.0, 0.0, 1.0]]))
except DomainViolation as err:
    print("domain violation:", err)

# --- additive structure ----------------------------------------------------
# expand() distributes products/negation over sums so that top-level '+'
# terms become visible; decompose_additive() then groups terms by the set of
# features they touch (their "signature").
flat = expand(parse_text("(x1 + x2) * x3 + sin(x2)"))
print("\nexpanded:", to_text(flat))
for sig, term in decompose_additive(flat):
    print(f"  signature {sig}: {to_text(term)}")

# signature_of reports which features a subtree reads
print("signature of the whole tree:", signature_of(flat))

# The nonlinearity counter drives the generator's minimum-nonlinearity
# requirement: nonlinear unaries, variable*variable products, powers.
for text in ("x1 + x2", "sin(x1)", "x1 * x2", "x1 + 3 * x2"):
    print(f"nonlinearities in {text!r}:", count_nonlinearities(parse_text(text)))
