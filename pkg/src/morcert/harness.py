"""Random test systems and end-to-end validation of the error certificate.

``run_validation`` builds one system and runs the whole pipeline for each
requested factor rank. Every inequality of the certificate is compared
against a directly measured quantity and logged as a ``Record``.
"""

import csv
import io
import json
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.linalg as spla

from .analysis import AnalysisSetup, assemble_G, setup_projectors, svd_split
from .approx import approx_bt_reduce
from .balanced import bt_projectors_variant, bt_reduce, gramian_factors
from .certificate import ErrorCertificate, certify, reduced_norm_bounds
from .errors import ConditionFailed, GenerationFailed, MorcertError
from .lti import LtiSystem, check_stability, difference_system, eval_transfer, expanded_error_system, project
from .lyapunov import (
    FROBENIUS,
    OBSERVABILITY,
    SPECTRAL,
    LyapPerturbationInput,
    gramians,
    lowrank_truncate,
    lyap_perturbation_bound,
    psd_clamp_tol,
    psd_difference_factor,
    stability_gramian_K,
)
from .norms import FrequencyGrid, h2_norm, hankel_norm, hinf_estimate

_ULP = np.finfo(float).eps
REL_SLACK = 1e-3
ABS_SLACK = 1e-9


@dataclass
class HarnessConfig:
    """One validation instance.

    ``trunc_ranks`` lists the factor ranks to test. Alternatively,
    ``eps_targets`` picks for each target the smallest rank whose
    truncation error is at most that target.
    """

    n: int = 20
    m: int = 2
    p: int = 2
    r: int = 4
    seed: int = 0
    decay: float = 0.5
    trunc_ranks: tuple = (12, 16)
    eps_targets: tuple = ()
    grid: FrequencyGrid = None
    output_dir: str = None
    lam_min: float = 1.0
    lam_spread: float = 10.0
    rel_slack: float = REL_SLACK
    abs_slack: float = ABS_SLACK

    def __post_init__(self):
        if min(self.n, self.m, self.p, self.r) < 1:
            raise ValueError("dimensions and order must be positive")
        if not self.r < self.n:
            raise ValueError("order r must be below n")
        if not 0 < self.decay < 1:
            raise ValueError("decay must lie in (0, 1)")
        for k in self.trunc_ranks:
            if not 1 <= k <= self.n:
                raise ValueError(f"factor rank {k} outside [1, {self.n}]")
        self.trunc_ranks = tuple(int(k) for k in self.trunc_ranks)
        self.eps_targets = tuple(float(e) for e in self.eps_targets)


def _orthogonal(rng, n):
    Q, R = np.linalg.qr(rng.standard_normal((n, n)))
    return Q * np.sign(np.diag(R))


def _unit_columns(rng, n, k):
    M = rng.standard_normal((n, k))
    return M / np.linalg.norm(M, axis=0)


def mean_decay(sigma, floor=1e-12):
    """Geometric mean of ``sigma_{i+1} / sigma_i`` over values above ``floor * sigma_1``."""
    s = np.asarray(sigma)
    s = s[s > floor * s[0]]
    if s.size < 2:
        return 0.0
    return float(np.exp(np.mean(np.log(s[1:] / s[:-1]))))


def gen_system(config, max_tries=100):
    """Random stable system ``A = T diag(-lambda) T^{-1}`` with ``cond(T) <= 10``.

    The eigenvalues are log-spaced in ``[lam_min, lam_min * lam_spread]``. ``B`` and
    ``C`` have unit-norm random columns. Draws are repeated until the Hankel
    values decay on average at least as fast as ``config.decay``.
    """
    rng = np.random.default_rng(config.seed)
    n = config.n
    for _ in range(max_tries):
        lam = np.logspace(np.log10(config.lam_min), np.log10(config.lam_min * config.lam_spread), n)
        s = np.logspace(0, rng.uniform(0, 1), n)
        Q1, Q2 = _orthogonal(rng, n), _orthogonal(rng, n)
        T = (Q1 * s) @ Q2
        Tinv = (Q2.T / s) @ Q1.T
        A = (T * -lam) @ Tinv
        sys = LtiSystem(A, _unit_columns(rng, n, config.m), _unit_columns(rng, n, config.p))
        grams = gramians(sys)
        S, R = gramian_factors(grams.P, grams.Q)
        sigma = np.linalg.svd(S.T @ R, compute_uv=False)
        if mean_decay(sigma) <= config.decay:
            return sys
    raise GenerationFailed(f"no system with mean Hankel decay <= {config.decay} after {max_tries} draws")


@dataclass
class Record:
    name: str
    relation: str
    bound: float
    measured: float
    rel_slack: float
    abs_slack: float
    lower: bool = False
    rank: int = None
    passed: bool = field(init=False)

    def __post_init__(self):
        self.bound = float(self.bound)
        self.measured = float(self.measured)
        if self.lower:
            self.passed = bool(self.measured >= self.bound * (1 - self.rel_slack) - self.abs_slack)
        else:
            self.passed = bool(self.measured <= self.bound * (1 + self.rel_slack) + self.abs_slack)


@dataclass
class RankResult:
    rank: int
    eps_app: float = None
    certificate: ErrorCertificate = None
    split_report: dict = None
    error: str = None


@dataclass
class ValidationReport:
    config: dict
    records: list = field(default_factory=list)
    ranks: list = field(default_factory=list)
    timings: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)
    error: str = None

    @property
    def failures(self):
        return [rec for rec in self.records if not rec.passed]

    @property
    def inapplicable(self):
        return [rr for rr in self.ranks if rr.certificate is None or not rr.certificate.applicable]

    def exit_code(self):
        if self.error or self.failures or any(rr.error and rr.certificate is None and not _is_hypothesis(rr.error) for rr in self.ranks):
            return 1
        if self.inapplicable:
            return 2
        return 0

    def to_dict(self, timings=True):
        d = {
            "config": self.config,
            "records": [asdict(rec) for rec in self.records],
            "ranks": [
                {
                    "rank": rr.rank,
                    "eps_app": rr.eps_app,
                    "error": rr.error,
                    "certificate": rr.certificate.to_dict() if rr.certificate else None,
                    "split": rr.split_report,
                }
                for rr in self.ranks
            ],
            "notes": self.notes,
            "error": self.error,
            "exit_code": self.exit_code(),
        }
        if timings:
            d["timings"] = self.timings
        return d

    @classmethod
    def from_dict(cls, d):
        rep = cls(d["config"], notes=d.get("notes", []), error=d.get("error"), timings=d.get("timings", {}))
        for x in d["records"]:
            x = dict(x)
            x.pop("passed", None)
            rep.records.append(Record(**x))
        for x in d["ranks"]:
            cert = ErrorCertificate.from_dict(x["certificate"]) if x.get("certificate") else None
            rep.ranks.append(RankResult(x["rank"], x.get("eps_app"), cert, x.get("split"), x.get("error")))
        return rep

    def to_text(self):
        lines = [f"validation seed={self.config.get('seed')} n={self.config.get('n')} r={self.config.get('r')}"]
        if self.error:
            lines.append(f"error: {self.error}")
        for rr in self.ranks:
            status = "applicable" if rr.certificate and rr.certificate.applicable else "inapplicable"
            why = ""
            if rr.error:
                why = f" ({rr.error})"
            elif rr.certificate is not None and not rr.certificate.applicable:
                why = f" ({rr.certificate.reason})"
            lines.append(f"rank {rr.rank}: eps_app={_fmt(rr.eps_app)} certificate {status}{why}")
        for rec in self.records:
            tag = "PASS" if rec.passed else "FAIL"
            op = ">=" if rec.lower else "<="
            where = "" if rec.rank is None else f"[k={rec.rank}] "
            lines.append(f"{tag} {where}{rec.name}: {rec.measured!r} {op} {rec.bound!r}   ({rec.relation})")
        n_fail = len(self.failures)
        lines.append(f"{len(self.records) - n_fail}/{len(self.records)} inequalities hold")
        return "\n".join(lines) + "\n"

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["name", "rank", "eps_app", "relation", "kind", "bound", "measured", "ratio", "rel_slack", "abs_slack", "pass"])
        eps_by_rank = {rr.rank: rr.eps_app for rr in self.ranks}
        for rec in self.records:
            ratio = rec.measured / rec.bound if rec.bound else ""
            w.writerow([
                rec.name, "" if rec.rank is None else rec.rank,
                "" if rec.rank is None else repr(eps_by_rank.get(rec.rank)),
                rec.relation, "lower" if rec.lower else "upper",
                repr(rec.bound), repr(rec.measured), repr(ratio) if ratio != "" else "",
                rec.rel_slack, rec.abs_slack, int(rec.passed),
            ])
        return buf.getvalue()


def _is_hypothesis(msg):
    return msg is not None and msg.startswith(("HypothesisViolated", "DegenerateGap", "RankCollapse", "EtaTooLarge"))


def _fmt(x):
    return "n/a" if x is None else f"{x:.3e}"


def _n2(M):
    return float(np.linalg.norm(M, 2)) if M.size else 0.0


def _nF(M):
    return float(np.linalg.norm(M, "fro")) if M.size else 0.0


def _config_dict(config):
    d = asdict(config)
    d["grid"] = asdict(config.grid) if config.grid else None
    d["trunc_ranks"] = list(config.trunc_ranks)
    d["eps_targets"] = list(config.eps_targets)
    return d


def ranks_for_targets(grams, targets):
    """Smallest rank per target with ``max(lambda_{k+1}(P), lambda_{k+1}(Q)) <= target``."""
    lp = np.sort(np.linalg.eigvalsh(grams.P))[::-1]
    lq = np.sort(np.linalg.eigvalsh(grams.Q))[::-1]
    n = lp.size
    out = []
    for t in targets:
        k = next((k for k in range(1, n + 1) if k == n or max(lp[k], lq[k]) <= t), n)
        out.append(k)
    return tuple(dict.fromkeys(out))


def ranks_in_band(grams, lo, hi, max_ranks=None):
    """Ranks ``k`` whose truncation error ``max(lambda_{k+1}(P), lambda_{k+1}(Q))`` lies in ``[lo, hi]``.

    With ``max_ranks`` set, an evenly spread subset of that size is kept.
    """
    lp = np.sort(np.linalg.eigvalsh(grams.P))[::-1]
    lq = np.sort(np.linalg.eigvalsh(grams.Q))[::-1]
    ks = [k for k in range(1, lp.size) if lo <= max(lp[k], lq[k]) <= hi]
    if max_ranks is not None and len(ks) > max_ranks:
        idx = np.unique(np.round(np.linspace(0, len(ks) - 1, max_ranks)).astype(int))
        ks = [ks[i] for i in idx]
    return tuple(ks)


class _Recorder:
    def __init__(self, report, rel, abs_):
        self.report, self.rel, self.abs = report, rel, abs_
        self.rank = None

    def add(self, name, relation, bound, measured, lower=False, abs_slack=None):
        rec = Record(name, relation, bound, measured, self.rel, self.abs if abs_slack is None else abs_slack, lower, self.rank)
        self.report.records.append(rec)
        return rec


def config_abs(rec):
    return rec.abs


def _lyap_checks(K, X, dA1, dA2, dW):
    """Apply the Lyapunov perturbation bound with measured perturbations."""
    normK = _n2(K)
    for norm, f in ((SPECTRAL, _n2), (FROBENIUS, _nF)):
        inp = LyapPerturbationInput(normK, f(X), _n2(dA1), _n2(dA2), f(dW), norm)
        try:
            _, bound = lyap_perturbation_bound(inp)
        except ConditionFailed:
            continue
        yield inp, bound, norm


def run_validation(config, sys=None):
    """Validate the certificate end to end for every configured factor rank."""
    report = ValidationReport(_config_dict(config))
    rec = _Recorder(report, config.rel_slack, config.abs_slack)
    t0 = time.perf_counter()
    try:
        if sys is None:
            sys = gen_system(config)
        report.timings["generate"] = time.perf_counter() - t0
        _validate(sys, config, report, rec)
    except MorcertError as exc:
        report.error = f"{type(exc).__name__}: {exc}"
    report.timings["total"] = time.perf_counter() - t0
    if config.output_dir:
        write_report(report, config.output_dir)
    return report


def write_report(report, out_dir):
    """Write ``report.json``, ``report.txt`` and ``report.csv`` into ``out_dir``."""
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "report.json"), "w", encoding="utf-8") as fh:
        json.dump(report.to_dict(), fh, indent=1, allow_nan=False)
        fh.write("\n")
    with open(os.path.join(out_dir, "report.txt"), "w", encoding="utf-8") as fh:
        fh.write(report.to_text())
    with open(os.path.join(out_dir, "report.csv"), "w", encoding="utf-8") as fh:
        fh.write(report.to_csv())


def _validate(sys, config, report, rec):
    r = config.r
    t = time.perf_counter()
    grams = gramians(sys)
    grid = config.grid
    report.timings["gramians"] = time.perf_counter() - t

    # exact balanced truncation
    t = time.perf_counter()
    bt = bt_reduce(sys, r, grams=grams)
    sigma = bt.spectrum.sigma
    err_sys = expanded_error_system(sys, bt.reduced)
    g = grid or FrequencyGrid.for_matrices(sys.A)
    hinf_bt, _ = hinf_estimate(err_sys, g)
    rec.add("bt_hinf_upper", "||H - H_BT||_inf <= 2 sum_{j>r} sigma_j", bt.bound_upper, hinf_bt)
    rec.add("bt_hinf_lower", "||H - H_BT||_inf >= sigma_{r+1}", bt.bound_lower, hinf_bt, lower=True, abs_slack=0.0)
    report.timings["exact_bt"] = time.perf_counter() - t

    ranks = config.trunc_ranks
    if config.eps_targets:
        ranks = ranks_for_targets(grams, config.eps_targets)
    normA, normB, normC = _n2(sys.A), _n2(sys.B), _n2(sys.C)
    for k in ranks:
        t = time.perf_counter()
        rr = RankResult(k)
        report.ranks.append(rr)
        rec.rank = k
        try:
            _validate_rank(sys, grams, sigma, r, k, g, rec, rr, normA, normB, normC)
        except MorcertError as exc:
            rr.error = f"{type(exc).__name__}: {exc}"
        report.timings[f"rank_{k}"] = time.perf_counter() - t
    rec.rank = None


def _validate_rank(sys, grams, sigma, r, k, grid, rec, rr, normA, normB, normC):
    Sf = lowrank_truncate(grams.P, rank=k)
    Rf = lowrank_truncate(grams.Q, rank=k, side=OBSERVABILITY)
    rr.eps_app = max(Sf.eps, Rf.eps)
    s1 = float(sigma[0])

    # practical reduction and its lower bound, valid for any order-r model
    practical = None
    try:
        practical = approx_bt_reduce(sys, Sf, Rf, r)
    except MorcertError as exc:
        rr.error = f"{type(exc).__name__}: {exc}"
    if practical is not None:
        err = expanded_error_system(sys, practical.reduced)
        hinf_apx, _ = hinf_estimate(err, grid, require_stable=False)
        rec.add("approx_hinf_lower", "||H - H~_BT||_inf >= sigma_{r+1}", sigma[r] if r < sigma.size else 0.0,
                hinf_apx, lower=True, abs_slack=0.0)

    # residual factors, G and G~
    setup = build_analysis_checked(sys, grams, Sf, Rf, r, rec, rr, s1)
    if setup is None:
        return
    pair, split = setup.pair, setup.split
    rr.split_report = {key: float(v) for key, v in split.report().items()}
    c = split.checks()
    ru = split.eps / split.delta_under * 2
    rec.add("gamma_bound", "||Gamma||_2 <= 2 eps / delta_under", ru, c["gamma"])
    rec.add("omega_bound", "||Omega||_2 <= 2 eps / delta_under", ru, c["omega"])
    rec.add("sigma_min_c1_weak", "sigma_min(Sigma1_check) >= sigma_r - eps - 2 eps^2 / delta_under",
            c["sigma_min_c1_weak_bound"], c["sigma_min_c1"], lower=True)
    rec.add("sigma_max_c2", "sigma_max(Sigma2_check) <= sigma_{r+1} + eps + 2 eps^2 / delta_under",
            c["sigma_max_c2_bound"], c["sigma_max_c2"])
    rec.add("sigma_min_c1", "sigma_min(Sigma1_check) >= sigma_r - eps", c["sigma_min_c1_bound"], c["sigma_min_c1"], lower=True)
    for side, key in (("U", "u1"), ("V", "v1")):
        rec.add(f"{key}_distance", f"||{side}1_check - {side}1||_2 <= 2 eps / delta_under", ru, c[f"{key}_distance"])
        rec.add(f"{key}_distance_formula", f"||{side}1_check - {side}1||_2 matches its closed form",
                1e-8, abs(c[f"{key}_distance"] - c[f"{key}_distance_formula"]), abs_slack=0.0)
    rec.add("sigma1_diff", "||Sigma1_check - Sigma1||_2 <= (1 + 4 sigma_1 / delta_under) eps",
            c["sigma1_diff_bound"], c["sigma1_diff"])
    rec.add("sigma1_diff_alt", "||Sigma1_check - Sigma1||_2 <= (1 + 1/sqrt2)/2 sigma_1 (2 eps/delta_under)^2 + 2 sqrt2 eps",
            c["sigma1_diff_alt_bound"], c["sigma1_diff"])
    rec.add("sigma1_inv_diff", "||Sigma1_check^-1 - Sigma1^-1||_2 <= (1 + 4 sigma_1/delta_under) eps / (sigma_r sigma_r_under)",
            c["sigma1_inv_diff_bound"], c["sigma1_inv_diff"])
    rec.add("split_residual", "||G~ - U_check blkdiag(Sigma_check) V_check^T||_2 <= 1e-8 sigma_1",
            1e-8 * s1, c["residual"], abs_slack=0.0)

    hat, tilde = setup.hat, setup.tilde
    if practical is not None:
        rec.add("setup_matches_practical", "setup projectors and square-root projectors give one transfer function",
                1e-8, _transfer_gap(practical.reduced, tilde, grid), abs_slack=0.0)
    # P11 = I and Q11 = Sigma1^2 for the variant realization
    P11 = spla.solve_continuous_lyapunov(hat.A, -hat.B @ hat.B.T)
    Q11 = spla.solve_continuous_lyapunov(hat.A.T, -hat.C @ hat.C.T)
    rec.add("P11_identity", "||P11 - I||_2 <= 1e-6", 1e-6, _n2(P11 - np.eye(r)), abs_slack=0.0)
    rec.add("Q11_sigma_squared", "||Q11 - Sigma1^2||_2 <= 1e-6 sigma_1^2", 1e-6 * s1**2,
            _n2(Q11 - np.diag(split.sigma[:r] ** 2)), abs_slack=0.0)

    cert = certify(setup)
    rr.certificate = cert
    rec.add("proj_x", "||X~1 - X1||_2 <= eps_x", cert.eps_x, _n2(setup.Xt1 - setup.X1))
    rec.add("proj_y", "||Y~1 - Y1||_2 <= eps_y", cert.eps_y, _n2(setup.Yt1 - setup.Y1))
    BBt, CCt = sys.B @ sys.B.T, sys.C @ sys.C.T
    diffs = {
        "a": (tilde.A - hat.A, sys.A, cert.eps_a),
        "b": (tilde.B - hat.B, sys.B, cert.eps_b),
        "c": (tilde.C - hat.C, sys.C, cert.eps_c),
        "b2": (tilde.B @ tilde.B.T - hat.B @ hat.B.T, BBt, cert.eps_b2),
        "c2": (tilde.C @ tilde.C.T - hat.C @ hat.C.T, CCt, cert.eps_c2),
    }
    labels = {"a": "A11", "b": "B1", "c": "C1", "b2": "B1 B1^T", "c2": "C1 C1^T"}
    for key, (D, M, bnd) in diffs.items():
        for norm, f in (("2", _n2), ("F", _nF)):
            scale = f(M)
            if scale == 0:
                continue
            rec.add(f"coeff_{key}_{norm}", f"||{labels[key]}~ - {labels[key]}^||_{norm} / ||.||_{norm} <= eps_{key}",
                    bnd, f(D) / scale)
    nb = reduced_norm_bounds(normA, normB, normC, pair.normP, pair.normQ, split.sigma_r, cert.eps_a, cert.eps_b, cert.eps_c)
    meas = {"A11_hat": hat.A, "A11_tilde": tilde.A, "B1_hat": hat.B, "B1_tilde": tilde.B, "C1_hat": hat.C, "C1_tilde": tilde.C}
    for key, M in meas.items():
        rec.add(f"norm_{key}", f"||{key}||_2 <= a-priori bound", nb[key], _n2(M))

    # Gramian blocks of the difference system by dense Sylvester solves
    Ah, At = hat.A, tilde.A
    P12 = spla.solve_sylvester(Ah, At.T, -hat.B @ tilde.B.T)
    P22 = spla.solve_sylvester(At, At.T, -tilde.B @ tilde.B.T)
    Q12 = spla.solve_sylvester(Ah.T, At, hat.C @ tilde.C.T)
    Q22 = spla.solve_sylvester(At.T, At, -tilde.C @ tilde.C.T)
    S1sq = np.diag(split.sigma[:r] ** 2)
    I = np.eye(r)
    dP12, dP22, dQ12, dQ22 = P12 - I, P22 - I, Q12 + S1sq, Q22 - S1sq

    # Lyapunov perturbation bound with measured perturbations on each block equation
    if cert.normK1 is not None:
        K1, K2 = stability_gramian_K(Ah)
        dA = At - Ah
        Z = np.zeros_like(dA)
        blocks = (
            ("P12", K1, I, Z, dA.T, hat.B @ (tilde.B - hat.B).T, dP12),
            ("P22", K1, I, dA.T, dA.T, tilde.B @ tilde.B.T - hat.B @ hat.B.T, dP22),
            ("Q12", K2, -S1sq, Z, dA, -(hat.C @ (tilde.C - hat.C).T), dQ12),
            ("Q22", K2, S1sq, dA, dA, tilde.C @ tilde.C.T - hat.C @ hat.C.T, dQ22),
        )
        stable_t = check_stability(At)[1]
        for name, K, X, dA1, dA2, dW, dX in blocks:
            for inp, bound, norm in _lyap_checks(K, X, dA1, dA2, dW):
                if not stable_t:
                    continue
                f = _n2 if norm == SPECTRAL else _nF
                rec.add(f"lyap_pert_{name}_{norm}", f"||d{name}||_{norm} <= ||K|| / (1 - eta) (||dW|| + ||X|| sum ||dA_i||)",
                        bound, f(dX))

    if not cert.applicable:
        return
    rec.add("xi1", "||dP12||_2 <= xi1", cert.xi1, _n2(dP12))
    rec.add("xi2", "||dP22||_2 <= xi2", cert.xi2, _n2(dP22))
    rec.add("zeta1", "||dQ12||_2 <= zeta1", cert.zeta1, _n2(dQ12))
    rec.add("zeta2", "||dQ22||_2 <= zeta2", cert.zeta2, _n2(dQ22))

    d_sys = difference_system(hat, tilde)
    stable_d = check_stability(d_sys.A)[1]
    hinf_d, _ = hinf_estimate(d_sys, FrequencyGrid.for_matrices(sys.A, d_sys.A), require_stable=False)
    rec.add("hd_hinf", "||H_BT - H~_BT||_inf <= eps_d_inf", cert.eps_d_inf, hinf_d)
    Pd = np.block([[I, P12], [P12.T, P22]])
    Qd = np.block([[S1sq, Q12], [Q12.T, Q22]])
    # square roots of quadratic forms: roundoff enters as sqrt(ulp * scale)
    sq_slack = np.sqrt(64 * 2 * r * _ULP * _n2(Pd) * _n2(Qd))
    rec.add("hd_hankel", "hankel norm of H_BT - H~_BT <= eps_d_inf", cert.eps_d_inf, hankel_norm(Pd, Qd),
            abs_slack=max(config_abs(rec), sq_slack))
    if stable_d:
        h2_d = h2_norm(d_sys)
        rec.add("hd_h2_B", "||H_BT - H~_BT||_2 <= eps_d_2 (input side)", cert.eps_d_2_B, h2_d,
                abs_slack=max(config_abs(rec), sq_slack))
        rec.add("hd_h2_C", "||H_BT - H~_BT||_2 <= eps_d_2 (output side)", cert.eps_d_2_C, h2_d,
                abs_slack=max(config_abs(rec), sq_slack))
    err_t = expanded_error_system(sys, tilde)
    hinf_t, _ = hinf_estimate(err_t, grid, require_stable=False)
    rec.add("final_inf", "||H - H~_BT||_inf <= 2 sum_{k>r} sigma_k + eps_d_inf", cert.final_inf, hinf_t)
    if stable_d:
        rec.add("final_h2", "||H - H~_BT||_2 <= ||H - H_BT||_2 + eps_d_2", cert.final_h2, h2_norm(err_t))


def build_analysis_checked(sys, grams, Sf, Rf, r, rec, rr, s1):
    """Analysis chain with the structural checks that need no hypotheses."""
    E = psd_difference_factor(grams.P, Sf.Z @ Sf.Z.T)
    F = psd_difference_factor(grams.Q, Rf.Z @ Rf.Z.T)
    S, R = np.hstack([Sf.Z, E]), np.hstack([Rf.Z, F])
    rec.add("norm_S_tilde", "||S~||_2 <= ||S||_2", _n2(S), _n2(Sf.Z), abs_slack=1e-8)
    rec.add("norm_R_tilde", "||R~||_2 <= ||R||_2", _n2(R), _n2(Rf.Z), abs_slack=1e-8)
    # squared form, with the PSD clamp tolerance as the absolute slack
    rec.add("norm_E", "||E||_2^2 <= eps1", Sf.eps, _n2(E) ** 2, abs_slack=psd_clamp_tol(grams.P))
    rec.add("norm_F", "||F||_2^2 <= eps2", Rf.eps, _n2(F) ** 2, abs_slack=psd_clamp_tol(grams.Q))
    pair = assemble_G(Sf, Rf, E, F)
    rec.add("g_distance", "||G~ - G||_2 <= eps", pair.eps, pair.measured, abs_slack=1e-10)
    sv_G = np.linalg.svd(pair.G, compute_uv=False)
    sv_Gt = np.linalg.svd(pair.Gt, compute_uv=False)
    rec.add("g_tilde_monotone", "sigma_i(G~) <= sigma_i(G) for all i", 0.0, float(np.max(sv_Gt - sv_G)),
            abs_slack=1e-10 * s1)
    try:
        split = svd_split(pair, r)
    except MorcertError as exc:
        rr.error = f"{type(exc).__name__}: {exc}"
        return None
    X1, Y1 = bt_projectors_variant(pair.S, pair.R, split.U, split.sigma, split.V, r, gap_tol=0.0, rank_tol=0.0)
    Xt1, Yt1 = setup_projectors(Sf, Rf, split)
    return AnalysisSetup(sys, grams, Sf, Rf, r, pair, split, X1, Y1, Xt1, Yt1, project(sys, X1, Y1), project(sys, Xt1, Yt1))


def _transfer_gap(sys1, sys2, grid, count=10):
    """Largest relative difference of two transfer functions at a few grid points."""
    w = np.geomspace(grid.omega_min * 1e2, grid.omega_max * 1e-2, count)
    gap = 0.0
    for om in w:
        H1 = eval_transfer(sys1, 1j * om)
        H2 = eval_transfer(sys2, 1j * om)
        gap = max(gap, _n2(H1 - H2) / max(_n2(H1), np.finfo(float).tiny))
    return gap


def thread_count():
    env = os.environ.get("MORCERT_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return os.cpu_count() or 1


def run_sweep(configs, threads=None):
    """Validate many independent instances, at most ``threads`` at a time."""
    threads = thread_count() if threads is None else max(1, int(threads))
    configs = list(configs)
    if threads == 1:
        return [run_validation(c) for c in configs]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(run_validation, configs))
