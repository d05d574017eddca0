"""Index of v and v^2 - 1 across weights, with each jump located by bisection on the computed index."""

from bcalc.elliptic import BOperator1D, excluded_weights, locate_jump, weight_sweep

for coeffs in (["0", "1"], ["-1", "0", "1"], ["(- x 1/2)", "1"]):
    P = BOperator1D.from_strings(coeffs)
    sweep = weight_sweep(P, -2.0, 2.0, 17)
    print(P)
    print("  excluded weights per face:", excluded_weights(P))
    for p in sweep.points:
        print(f"  lambda {p.lam:+.3f}  ker {p.ker}  coker {p.coker}  index {p.index:+d}")
    for j in sweep.jumps:
        where = locate_jump(P, j["from"], j["to"])
        print(f"  jump {j['index_change']:+d} near {where:+.5f} ({j['roots_crossed']} indicial roots crossed)")
