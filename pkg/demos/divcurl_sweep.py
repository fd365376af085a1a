"""Div-curl products on a small torus, refined three times.

F is the gradient of a bump (so its mollified curl vanishes) and G is the
perpendicular gradient of a smooth series (so it is divergence free).
"""
from renormprod import divcurl
from renormprod.experiments import ExperimentConfig, divcurl_fields

for mode in divcurl.MODES:
    cfg = ExperimentConfig(dim=2, L=2, p=0.5, mode=mode, seed=3)
    print(mode)
    for J in (5, 6, 7):
        F, G = divcurl_fields(cfg, 0, J)
        rep = divcurl.divcurl_experiment(F, G, cfg.p, mode)
        print(f"  J={J}  certified={rep.certified}  curl={rep.curl_residual:.1e}  "
              f"div={rep.div_residual:.1e}  ratio={rep.ratio:.5f}")
