"""Metropolis-within-Gibbs engine with a natural-cubic-spline quantile curve.

One sweep updates, in order: the curve values at the knots (joint spherical
random-walk MH), the smoothing precision (log-normal random-walk MH), every
latent covariate site (independent normal random-walk MH, valid jointly
because the sites are conditionally independent), then the conjugate blocks
(error variances, latent-covariate variance and mean, and per-proxy mean
parameters).  Proposal scales adapt toward their target acceptance rates
during burn-in only.
"""

from __future__ import annotations

import numpy as np

from .dists import make_rng
from .loss import check_loss
from .model import BenchmarkProxy, ModelSpec, PolynomialProxy, SplineProxy
from .proxies import (
    BenchmarkState,
    PolyState,
    SplineState,
    draw_error_variance,
    draw_poly_coeffs,
    draw_smooth_precision,
    draw_spline_coeffs,
    polynomial_design,
    proxy_mean,
)
from .samples import ChainConfig, PosteriorSamples
from .splines import NcsBasis, PsplineBasis, build_knot_grid

__all__ = [
    "run_ncs_chain",
    "curve_log_accept",
    "smooth_log_accept",
    "latent_log_accept",
    "pilot_quantile_poly",
    "gcv_smoothing_init",
    "knot_grid_for",
]


# ---------------------------------------------------------------------------
# MH log acceptance ratios (shared by the sweep and by the ratio oracles)

def curve_log_accept(y, p, fits_cur, fits_prop, lam, quad_cur, quad_prop) -> float:
    """Log MH ratio of the joint curve proposal (symmetric kernel)."""
    dloss = float(np.sum(check_loss(y - fits_cur, p)) - np.sum(check_loss(y - fits_prop, p)))
    return dloss - 0.5 * lam * (quad_prop - quad_cur)


def smooth_log_accept(lam_cur, lam_prop, quad, rank, shape, rate) -> float:
    """Log MH ratio of the log-normal smoothing-precision proposal.

    Includes the lam^{rank/2} normalizer of the rank-deficient curve prior,
    the gamma prior, and the log-normal proposal asymmetry lam_prop/lam_cur.
    """
    dlog = np.log(lam_prop) - np.log(lam_cur)
    return (0.5 * rank + shape) * dlog - (0.5 * quad + rate) * (lam_prop - lam_cur)


def latent_log_accept(
    y, p, fit_cur, fit_prop, proxies, means_cur, means_prop, sigma2s,
    x_cur, x_prop, mu_x, sigma_x2,
) -> np.ndarray:
    """Per-site log MH ratio for the latent covariate (symmetric kernel)."""
    out = check_loss(y - fit_cur, p) - check_loss(y - fit_prop, p)
    for w, m_cur, m_prop, s2 in zip(proxies, means_cur, means_prop, sigma2s):
        out = out + ((w - m_cur) ** 2 - (w - m_prop) ** 2) / (2.0 * s2)
    out = out + ((x_cur - mu_x) ** 2 - (x_prop - mu_x) ** 2) / (2.0 * sigma_x2)
    return out


# ---------------------------------------------------------------------------
# Initialization helpers

def pilot_quantile_poly(y, x, p, degree: int = 2, iters: int = 400):
    """Quadratic check-loss pilot fit by averaged subgradient descent.

    Returns a callable predicting the fitted quantile curve, falling back to
    the constant empirical quantile when the descent fails to beat it.
    """
    y = np.asarray(y, dtype=float)
    x = np.asarray(x, dtype=float)
    n = y.shape[0]
    mu, sd = float(np.mean(x)), float(np.std(x))
    sd = sd if sd > 0 else 1.0
    z = (x - mu) / sd
    design = np.vander(z, degree + 1, increasing=True)
    coef = np.linalg.lstsq(design, y, rcond=None)[0]
    coef[0] += float(np.quantile(y - design @ coef, p))
    step0 = max(float(np.std(y)), 1e-8)
    avg = np.zeros_like(coef)
    n_avg = 0
    for t in range(1, iters + 1):
        resid = y - design @ coef
        grad = -design.T @ (p - (resid < 0.0)) / n
        coef = coef - step0 / np.sqrt(t) * grad
        if t > iters // 2:
            avg += coef
            n_avg += 1
    coef = avg / max(n_avg, 1)

    const = float(np.quantile(y, p))
    loss_fit = float(np.sum(check_loss(y - design @ coef, p)))
    loss_const = float(np.sum(check_loss(y - const, p)))
    if not np.isfinite(loss_fit) or loss_fit > loss_const:
        return lambda pts: np.full(np.atleast_1d(pts).shape, const)
    return lambda pts: np.vander((np.atleast_1d(pts) - mu) / sd, degree + 1, increasing=True) @ coef


def gcv_smoothing_init(y, x, basis: NcsBasis) -> float:
    """Smoothing precision minimizing GCV of the mean-regression smoothing spline."""
    y = np.asarray(y, dtype=float)
    design = basis.design(np.asarray(x, dtype=float))
    n = y.shape[0]
    ata = design.T @ design
    aty = design.T @ y
    pen = basis.penalty.mat
    jitter = 1e-10 * (np.trace(ata) / ata.shape[0] + 1.0) * np.eye(ata.shape[0])
    best = (np.inf, 1.0)
    for lam in np.logspace(-4, 6, 25):
        try:
            inv = np.linalg.solve(ata + lam * pen + jitter, np.column_stack([aty[:, None], ata]))
        except np.linalg.LinAlgError:
            continue
        ghat = inv[:, 0]
        tr_hat = float(np.trace(inv[:, 1:]))
        rss = float(np.sum((y - design @ ghat) ** 2))
        denom = max(n - tr_hat, 1e-8)
        gcv = n * rss / denom**2
        if gcv < best[0]:
            best = (gcv, lam)
    return best[1]


def knot_grid_for(anchor: np.ndarray, config: ChainConfig) -> np.ndarray:
    """Evenly spaced knots over the anchor covariate's padded range."""
    anchor = np.asarray(anchor, dtype=float)
    sd = float(np.std(anchor))
    pad = config.knot_pad * (sd if sd > 0 else 1.0)
    return build_knot_grid(float(anchor.min()) - pad, float(anchor.max()) + pad, config.n_knots)


def _init_proxy_states(model, x0, ps_basis, rng):
    states = []
    for spec, w in zip(model.specs, model.proxies):
        if isinstance(spec, BenchmarkProxy):
            resid = w - x0
            states.append(BenchmarkState(sigma2=max(float(np.var(resid)), 1e-4)))
        elif isinstance(spec, PolynomialProxy):
            design = polynomial_design(x0, spec.degree)
            alpha = np.linalg.lstsq(design, w, rcond=None)[0]
            resid = w - design @ alpha
            states.append(PolyState(alpha=alpha, sigma2=max(float(np.var(resid)), 1e-4)))
        else:
            design = ps_basis.design(x0)
            pen = ps_basis.penalty.mat
            beta = np.linalg.solve(
                design.T @ design + pen + 1e-8 * np.eye(ps_basis.dim), design.T @ w
            )
            resid = w - design @ beta
            states.append(
                SplineState(beta=beta, lam=1.0, sigma2=max(float(np.var(resid)), 1e-4))
            )
    return states


def _proxy_means(model, states, x, ps_design=None, ps_basis=None):
    means = []
    for spec, st in zip(model.specs, states):
        if isinstance(spec, BenchmarkProxy):
            means.append(x)
        elif isinstance(spec, PolynomialProxy):
            means.append(polynomial_design(x, spec.degree) @ st.alpha)
        else:
            if ps_design is not None:
                means.append(ps_design @ st.beta)
            else:
                means.append(proxy_mean(spec, st, x, ps_basis))
    return means


# ---------------------------------------------------------------------------
# Chain runner

def run_ncs_chain(
    model: ModelSpec,
    config: ChainConfig | None = None,
    seed: int = 0,
    x_frozen: np.ndarray | None = None,
) -> PosteriorSamples:
    """Run one chain; deterministic given (model, config, seed, x_frozen).

    x_frozen pins the latent covariate (no covariate updates), which also
    anchors the knot grid and the pilot fits to the frozen values.
    """
    if config is None:
        config = ChainConfig()
    rng = make_rng(seed)
    y, p, priors = model.y, model.p, model.priors
    n = model.n
    n_proxies = model.n_proxies

    frozen = x_frozen is not None
    if frozen:
        x = np.ascontiguousarray(x_frozen, dtype=float).copy()
        if x.shape != y.shape:
            raise ValueError("frozen covariate must match the outcome length")
        anchor = x
    else:
        x = model.benchmark_values.copy()
        anchor = x
    anchor_sd = float(np.std(anchor))
    anchor_sd = anchor_sd if anchor_sd > 0 else 1.0

    knots = knot_grid_for(anchor, config)
    ncs = NcsBasis(knots)
    pen = ncs.penalty.mat
    pen_rank = ncs.penalty.rank
    has_spline_proxy = any(isinstance(s, SplineProxy) for s in model.specs)
    ps_basis = PsplineBasis(knots, config.spline_degree) if has_spline_proxy else None
    ps_pen = ps_basis.penalty if ps_basis is not None else None

    # initial state
    g = pilot_quantile_poly(y, anchor, p)(knots)
    lam = gcv_smoothing_init(y, anchor, ncs)
    states = _init_proxy_states(model, x, ps_basis, rng)
    mu_x = float(np.mean(x))
    sigma_x2 = max(float(np.var(x)), 1e-4)

    design = ncs.design(x)
    fits = design @ g
    gamma = ncs.second_derivs(g)
    quad_g = float(g @ pen @ g)
    ps_design = ps_basis.design(x) if has_spline_proxy else None
    means = _proxy_means(model, states, x, ps_design)
    sigma2s = np.array([st.sigma2 for st in states])

    # proposal scales
    curve_scale = (
        config.curve_scale0
        if config.curve_scale0 is not None
        else 0.05 * max(float(np.std(y)), 1e-8)
    )
    smooth_logsd = config.smooth_logsd0
    x_scales = np.full(n, config.x_scale_factor * anchor_sd)

    n_keep = config.n_retained
    keep_g = np.empty((n_keep, config.n_knots))
    keep_lam = np.empty(n_keep)
    keep_x = np.empty((n_keep, n))
    keep_s2 = np.empty((n_keep, n_proxies))
    keep_mu = np.empty(n_keep)
    keep_sx2 = np.empty(n_keep)
    keep_proxy: list[dict[str, np.ndarray]] = []
    for spec in model.specs:
        if isinstance(spec, PolynomialProxy):
            keep_proxy.append({"alpha": np.empty((n_keep, spec.degree + 1))})
        elif isinstance(spec, SplineProxy):
            keep_proxy.append({"beta": np.empty((n_keep, ps_basis.dim)), "lam": np.empty(n_keep)})
        else:
            keep_proxy.append({})

    acc_curve = 0
    acc_smooth = 0
    acc_x = np.zeros(n)
    kept = 0
    post_iters = config.iterations - config.burnin

    for t in range(1, config.iterations + 1):
        adapting = t <= config.burnin
        gain = t ** (-config.adapt_decay) if adapting else 0.0

        # curve block
        g_prop = g + curve_scale * rng.standard_normal(config.n_knots)
        fits_prop = design @ g_prop
        quad_prop = float(g_prop @ pen @ g_prop)
        logr = curve_log_accept(y, p, fits, fits_prop, lam, quad_g, quad_prop)
        if np.log(rng.uniform()) < logr:
            g, fits, quad_g = g_prop, fits_prop, quad_prop
            gamma = ncs.second_derivs(g)
            if not adapting:
                acc_curve += 1
        if adapting:
            curve_scale *= np.exp(gain * (min(1.0, np.exp(min(logr, 0.0))) - config.target_accept_joint))

        # smoothing precision block
        lam_prop = lam * np.exp(smooth_logsd * rng.standard_normal())
        logr = smooth_log_accept(lam, lam_prop, quad_g, pen_rank, priors.smooth_shape, priors.smooth_rate)
        if np.log(rng.uniform()) < logr:
            lam = lam_prop
            if not adapting:
                acc_smooth += 1
        if adapting:
            smooth_logsd *= np.exp(gain * (min(1.0, np.exp(min(logr, 0.0))) - config.target_accept_site))

        # latent covariate block
        if not frozen:
            x_prop = x + x_scales * rng.standard_normal(n)
            fit_prop = ncs.evaluate(g, x_prop, gamma)
            ps_design_prop = ps_basis.design(x_prop) if has_spline_proxy else None
            means_prop = _proxy_means(model, states, x_prop, ps_design_prop)
            logr_vec = latent_log_accept(
                y, p, fits, fit_prop, model.proxies, means, means_prop,
                sigma2s, x, x_prop, mu_x, sigma_x2,
            )
            accept = np.log(rng.uniform(size=n)) < logr_vec
            if accept.any():
                x[accept] = x_prop[accept]
                design = ncs.design(x)
                fits = design @ g
                if has_spline_proxy:
                    ps_design = ps_basis.design(x)
                means = _proxy_means(model, states, x, ps_design)
            if not adapting:
                acc_x += accept
            if adapting:
                probs = np.exp(np.minimum(logr_vec, 0.0))
                x_scales *= np.exp(gain * (probs - config.target_accept_site))

        # conjugate blocks
        for k, (spec, st, w) in enumerate(zip(model.specs, states, model.proxies)):
            st.sigma2 = draw_error_variance(
                w - means[k], priors.proxy_var_shape, priors.proxy_var_scale, rng
            )
            sigma2s[k] = st.sigma2
        resid_x = x - mu_x
        sigma_x2 = draw_error_variance(resid_x, priors.x_var_shape, priors.x_var_scale, rng)
        prec = n / sigma_x2 + 1.0 / priors.x_mean_var
        mean = (np.sum(x) / sigma_x2 + priors.x_mean_loc / priors.x_mean_var) / prec
        mu_x = mean + rng.standard_normal() / np.sqrt(prec)

        refresh = False
        for k, (spec, st, w) in enumerate(zip(model.specs, states, model.proxies)):
            if isinstance(spec, PolynomialProxy):
                prior_mean = np.full(spec.degree + 1, priors.coef_loc)
                prior_cov = priors.coef_var * np.eye(spec.degree + 1)
                st.alpha = draw_poly_coeffs(x, w, st.sigma2, prior_mean, prior_cov, rng)
                refresh = True
            elif isinstance(spec, SplineProxy):
                st.beta = draw_spline_coeffs(ps_design, w, st.sigma2, st.lam, ps_pen.mat, rng)
                st.lam = draw_smooth_precision(
                    float(st.beta @ ps_pen.mat @ st.beta), ps_pen.rank,
                    priors.smooth_shape, priors.smooth_rate, rng,
                )
                refresh = True
        if refresh:
            means = _proxy_means(model, states, x, ps_design)

        if t > config.burnin and (t - config.burnin) % config.thin == 0 and kept < n_keep:
            keep_g[kept] = g
            keep_lam[kept] = lam
            keep_x[kept] = x
            keep_s2[kept] = sigma2s
            keep_mu[kept] = mu_x
            keep_sx2[kept] = sigma_x2
            for spec, st, slot in zip(model.specs, states, keep_proxy):
                if isinstance(spec, PolynomialProxy):
                    slot["alpha"][kept] = st.alpha
                elif isinstance(spec, SplineProxy):
                    slot["beta"][kept] = st.beta
                    slot["lam"][kept] = st.lam
            kept += 1

    accept_rates = {
        "curve": acc_curve / post_iters,
        "smooth": acc_smooth / post_iters,
        "x_mean": float(np.mean(acc_x)) / post_iters if not frozen else float("nan"),
        "x_min": float(np.min(acc_x)) / post_iters if not frozen else float("nan"),
        "x_max": float(np.max(acc_x)) / post_iters if not frozen else float("nan"),
    }
    return PosteriorSamples(
        family="ncs",
        knots=knots,
        spline_degree=config.spline_degree,
        curve=keep_g,
        smooth=keep_lam,
        x=keep_x,
        sigma2=keep_s2,
        mu_x=keep_mu,
        sigma_x2=keep_sx2,
        proxy_params=keep_proxy,
        model=model,
        accept_rates=accept_rates,
        seed=seed,
        config=config,
        extra={"frozen": frozen},
    )
