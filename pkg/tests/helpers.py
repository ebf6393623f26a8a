"""Small builders shared by the tests."""

from kolmogorov_fk.problem.io import spec_from_dict


def expr_spec(drift, diffusion, potential="0", source="0", terminal="0", T=1.0, growth=None, **consts):
    """Problem from expression strings; ``diffusion`` is a list of rows."""
    d = len(drift)
    m = len(diffusion[0])
    coeffs = {"drift": list(drift), "diffusion": [list(r) for r in diffusion], "potential": potential, "source": source, "terminal": terminal}
    if growth:
        coeffs["growth"] = growth
    consts = dict(consts, T=T)
    return spec_from_dict({"dimensions": {"d": d, "m": m}, "coefficients": coeffs, "constants": consts})
