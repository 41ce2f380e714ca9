"""A Wilson loop with two marks in the twisted-torus model."""
from fractions import Fraction

from bvgf import dgla
from bvgf.action import effective_action, make_context
from bvgf.homotopy import shifted_splitting
from bvgf.links import Component, LinkWord, holonomy_trace, observable, observable_defect, rational_rotation

model = dgla.shipped_models()["twisted_torus"]
split = shifted_splitting(dgla.cohomology_splitting(model), Fraction(1, 10))
ctx = make_context(model, split, truncation=(2, 1))

h = rational_rotation([1, 2, 0], Fraction(1, 3))
link = LinkWord([Component([h, h @ h])])
print("bare trace of the holonomy:", holonomy_trace(link.components[0], []))

O = observable(ctx, link, max_vertices=1)
print(f"observable: {len(O.value.terms)} terms, constant term {O.value.coefficient((), 0)}")

S = effective_action(ctx, 1)
print("defect of the constant observable 1:", observable_defect(S, 1).pretty())
