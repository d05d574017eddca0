"""Holonomy, admissible weights and expected b-cohomology of the quotient cylinder for several twists."""

from fractions import Fraction

from bcalc.atlas import quotient_cylinder
from bcalc.elliptic import predicted_quotient_cohomology
from bcalc.weights import boundary_holonomy, weight_space

for alpha in (Fraction(1), Fraction(2), Fraction(1, 2), Fraction(3, 7)):
    Q = quotient_cylinder(alpha)
    (comp,) = boundary_holonomy(Q).components.values()
    coh = predicted_quotient_cohomology(float(alpha))
    print(f"alpha {str(alpha):4s} holonomy {str(comp.holonomy):4s} twisted {comp.twisted!s:5s} "
          f"dim W {weight_space(Q).dimension}  expected dims {coh.dims}")
