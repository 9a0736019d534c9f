"""Monte-Carlo experiment drivers behind the command-line interface.

Every driver maps independent seeded drops (optionally across a process
pool), reduces them in drop-index order and returns ``(fieldnames, rows,
extras)`` where ``rows`` is what lands in the CSV.  Drop d of experiment
salt s under master seed m draws from ``default_rng([m, s, d])`` (noise
streams append the sweep index), so outputs are byte-identical for a given
(config, seed) at any parallelism degree.
"""

from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import metrics
from .aging import (ar_predict, build_pattern_bank, classify_pattern,
                    default_bank_grid, fit_ar_from_history, preprocess_csi)
from .bals import Tucker2Bals
from .beamforming import CascadeChannel, optimize, sinr, sum_rate
from .channel import (gen_correlation, gen_E_series, generate_channel_set,
                      probe_anchor, simulate_training)
from .cnn import DopplerCnnClassifier
from .config import ExperimentSpec
from .dft_ls import DftLs
from .reflections import build_dft_book, build_training_book, validate_identifiability

_SALT_CHANNEL = 11
_SALT_NOISE = 12
_SALT_DATASET = 13
_SALT_TRAINING = 14

_dft_book_cache = {}


def _cached_dft_book(cfg):
    key = (cfg.group_size, cfg.groups, cfg.n_users)
    if key not in _dft_book_cache:
        _dft_book_cache[key] = build_dft_book(cfg)
    return _dft_book_cache[key]


def _map_drops(worker, tasks, parallelism):
    if parallelism <= 1:
        return [worker(task) for task in tasks]
    chunk = max(1, len(tasks) // (4 * parallelism))
    with ProcessPoolExecutor(max_workers=parallelism) as pool:
        return list(pool.map(worker, tasks, chunksize=chunk))


# --------------------------------------------------------------------------
# estimation accuracy vs SNR
# --------------------------------------------------------------------------

def _estimation_drop(task):
    cfg, snr_list, drop = task
    rng_ch = np.random.default_rng([cfg.seed, _SALT_CHANNEL, drop])
    channels = generate_channel_set(cfg, rng_ch, n_intervals=1)
    book = build_training_book(cfg, rng_ch)
    ls_book, _ = _cached_dft_book(cfg)
    truth = channels.cascade(1)
    out = []
    for idx, snr_db in enumerate(snr_list):
        rng_noise = np.random.default_rng([cfg.seed, _SALT_NOISE, drop, idx])
        obs = simulate_training(channels, book, 1, snr_db, rng_noise)
        est = Tucker2Bals(book).fit(obs.Y)
        nm_prop = metrics.nmse(est.cascade(), truth)
        obs_ls = simulate_training(channels, ls_book, 1, snr_db, rng_noise)
        ls = DftLs(cfg.group_size, cfg.groups).fit(obs_ls.Y)
        nm_conv = metrics.nmse(ls.cascade(), truth)
        out.append((nm_prop, nm_conv))
    return out


def run_nmse_vs_snr(spec: ExperimentSpec):
    """Mean cascade NMSE of the tensor fit and the LS baseline per SNR."""
    cfg = spec.system
    report = validate_identifiability(cfg)
    if not report:
        raise ValueError(report.message)
    tasks = [(cfg, tuple(spec.snr_db_list), d) for d in range(spec.drops)]
    per_drop = _map_drops(_estimation_drop, tasks, spec.parallelism)
    prop = np.array([[row[i][0] for row in per_drop]
                     for i in range(len(spec.snr_db_list))])
    conv = np.array([[row[i][1] for row in per_drop]
                     for i in range(len(spec.snr_db_list))])
    arch = "FC" if cfg.groups == 1 else "GC"
    rows = []
    for i, snr_db in enumerate(spec.snr_db_list):
        rows.append({"scheme": f"{arch}-PROP", "snr_db": float(snr_db),
                     "mean_nmse": float(prop[i].mean()), "drops": spec.drops})
        rows.append({"scheme": f"{arch}-CONV", "snr_db": float(snr_db),
                     "mean_nmse": float(conv[i].mean()), "drops": spec.drops})
    extras = {"prop_per_drop": prop, "conv_per_drop": conv}
    return ["scheme", "snr_db", "mean_nmse", "drops"], rows, extras


# --------------------------------------------------------------------------
# estimation accuracy vs training blocks
# --------------------------------------------------------------------------

def _nmse_vs_t_drop(task):
    cfg, t_list, drop = task
    rng_ch = np.random.default_rng([cfg.seed, _SALT_CHANNEL, drop])
    channels = generate_channel_set(cfg.with_updates(n_blocks=max(t_list)),
                                    rng_ch, n_intervals=1)
    truth = channels.cascade(1)
    out = []
    for idx, t in enumerate(t_list):
        cfg_t = cfg.with_updates(n_blocks=int(t))
        rng_book = np.random.default_rng([cfg.seed, _SALT_TRAINING, drop, idx])
        book = build_training_book(cfg_t, rng_book)
        rng_noise = np.random.default_rng([cfg.seed, _SALT_NOISE, drop, idx])
        obs = simulate_training(channels, book, 1, cfg.snr_db, rng_noise)
        est = Tucker2Bals(book).fit(obs.Y)
        out.append(metrics.nmse(est.cascade(), truth))
    return out


def find_plateau(t_values, nmse_values, tolerance=0.05):
    """Smallest T whose NMSE is within ``tolerance`` of the final value."""
    final = nmse_values[-1]
    for t, value in zip(t_values, nmse_values):
        if value <= final * (1.0 + tolerance):
            return t
    return t_values[-1]


def run_nmse_vs_t(spec: ExperimentSpec):
    """NMSE against the training-block budget, with the plateau onset."""
    cfg = spec.system
    for t in spec.t_list:
        report = validate_identifiability(cfg.with_updates(n_blocks=int(t)))
        if not report:
            raise ValueError(f"T={t}: {report.message}")
    tasks = [(cfg, tuple(spec.t_list), d) for d in range(spec.drops)]
    per_drop = np.array(_map_drops(_nmse_vs_t_drop, tasks, spec.parallelism))
    means = per_drop.mean(axis=0)
    plateau_t = find_plateau(list(spec.t_list), list(means))
    arch = "FC" if cfg.groups == 1 else "GC"
    rows = [{"scheme": f"{arch}-PROP", "t_blocks": int(t),
             "mean_nmse": float(m), "plateau_t": int(plateau_t),
             "drops": spec.drops}
            for t, m in zip(spec.t_list, means)]
    extras = {"per_drop": per_drop, "plateau_t": plateau_t}
    return ["scheme", "t_blocks", "mean_nmse", "plateau_t", "drops"], rows, extras


# --------------------------------------------------------------------------
# classifier dataset and training
# --------------------------------------------------------------------------

def make_cnn_dataset(cfg, f_n_values, samples_per_class, seed, noise_std=0.0,
                     salt=_SALT_DATASET):
    """Labeled preprocessed-CSI matrices, one class per Doppler value."""
    v = cfg.q_intervals
    xs, ys = [], []
    for label, f_n in enumerate(f_n_values):
        cfg_f = cfg.with_updates(f_n=float(f_n), user_speed=None)
        r_ris = gen_correlation(cfg.n_ris, cfg.rho_ris)
        for s in range(samples_per_class):
            rng = np.random.default_rng([seed, salt, label, s])
            series = gen_E_series(cfg_f, r_ris, rng, n_intervals=v)
            if noise_std > 0.0:
                noise = (rng.standard_normal(series.shape)
                         + 1j * rng.standard_normal(series.shape))
                series = series + noise_std / np.sqrt(2.0) * noise
            xs.append(preprocess_csi(series, v))
            ys.append(label)
    return np.array(xs), np.array(ys)


def train_bank_classifier(cfg, f_n_values=None, samples_per_class=200,
                          order=16, epsilon=0.1, seed=None, noise_std=0.0,
                          **clf_options):
    """Train the Doppler classifier on synthetic drops; returns (clf, bank)."""
    if f_n_values is None:
        f_n_values = default_bank_grid()
    if seed is None:
        seed = cfg.seed
    bank = build_pattern_bank(f_n_values, order=order, epsilon=epsilon)
    x, y = make_cnn_dataset(cfg, bank.f_n_values, samples_per_class, seed,
                            noise_std=noise_std)
    clf = DopplerCnnClassifier(random_state=seed, **clf_options)
    clf.fit(x, y)
    return clf, bank


# --------------------------------------------------------------------------
# prediction
# --------------------------------------------------------------------------

def _prediction_drop(task):
    cfg, drop, clf, bank, ar_orders, horizon = task
    rng_ch = np.random.default_rng([cfg.seed, _SALT_CHANNEL, drop])
    n_train = cfg.q_intervals
    channels = generate_channel_set(cfg, rng_ch, n_intervals=n_train + horizon)
    book = build_training_book(cfg, rng_ch)
    rng_noise = np.random.default_rng([cfg.seed, _SALT_NOISE, drop])
    anchors = probe_anchor(channels, channels.H.shape[1] // book.groups)
    history = []
    est = None
    for interval in range(1, n_train + 1):
        obs = simulate_training(channels, book, interval, cfg.snr_db, rng_noise)
        est = Tucker2Bals(book).fit(obs.Y)
        est.resolve_scaling(anchors)
        history.append(est.E_)
    history = np.array(history)
    h_hat = est.H_
    results = {}
    c_matrix = preprocess_csi(history, n_train)
    cnn_model = classify_pattern(clf, c_matrix, bank)
    preds = ar_predict(history, cnn_model, horizon)
    results["CNN-AR"] = _prediction_nmse(preds, h_hat, channels, n_train)
    for order in ar_orders:
        model = fit_ar_from_history(history, order)
        preds = ar_predict(history, model, horizon)
        results[f"AR({order})"] = _prediction_nmse(preds, h_hat, channels, n_train)
    return results


def _prediction_nmse(preds, h_hat, channels, n_train):
    return [metrics.nmse(h_hat @ preds[step], channels.cascade(n_train + step + 1))
            for step in range(len(preds))]


def run_prediction(spec: ExperimentSpec, classifier=None, bank=None,
                   ar_orders=(8, 16, 24)):
    """Prediction NMSE per horizon step for the forecasters, plus an
    optional Doppler sweep of the classifier-aided forecaster."""
    cfg = spec.system
    if classifier is None or bank is None:
        options = dict(spec.cnn_options)
        classifier, bank = train_bank_classifier(cfg, **options)
    horizon = spec.horizon
    tasks = [(cfg, d, classifier, bank, tuple(ar_orders), horizon)
             for d in range(spec.drops)]
    per_drop = _map_drops(_prediction_drop, tasks, spec.parallelism)
    names = list(per_drop[0].keys())
    rows = []
    extras = {"per_drop": per_drop, "f_n_rows": {}}
    for name in names:
        arr = np.array([d[name] for d in per_drop])
        extras[name] = arr
        for step in range(horizon):
            rows.append({"predictor": name, "f_n": cfg.normalized_doppler,
                         "horizon": step + 1,
                         "mean_nmse": float(arr[:, step].mean()),
                         "drops": spec.drops})
    for f_n in spec.f_n_list:
        cfg_f = cfg.with_updates(f_n=float(f_n), user_speed=None)
        tasks = [(cfg_f, d, classifier, bank, (), horizon)
                 for d in range(spec.drops)]
        sweep = _map_drops(_prediction_drop, tasks, spec.parallelism)
        arr = np.array([d["CNN-AR"] for d in sweep])
        extras["f_n_rows"][f_n] = arr
        rows.append({"predictor": "CNN-AR", "f_n": float(f_n),
                     "horizon": horizon,
                     "mean_nmse": float(arr[:, -1].mean()),
                     "drops": spec.drops})
    return ["predictor", "f_n", "horizon", "mean_nmse", "drops"], rows, extras


# --------------------------------------------------------------------------
# sum rate
# --------------------------------------------------------------------------

def _sumrate_drop(task):
    cfg, snr_d_list, drop = task
    rng_ch = np.random.default_rng([cfg.seed, _SALT_CHANNEL, drop])
    channels = generate_channel_set(cfg, rng_ch, n_intervals=1)
    book = build_training_book(cfg, rng_ch)
    ls_book, _ = _cached_dft_book(cfg)
    rng_noise = np.random.default_rng([cfg.seed, _SALT_NOISE, drop])
    obs = simulate_training(channels, book, 1, cfg.snr_db, rng_noise)
    est = Tucker2Bals(book).fit(obs.Y)
    obs_ls = simulate_training(channels, ls_book, 1, cfg.snr_db, rng_noise)
    ls = DftLs(cfg.group_size, cfg.groups).fit(obs_ls.Y)

    topology = "fully" if cfg.groups == 1 else "group"
    e_true = channels.E(1)
    csis = {
        "perfect": CascadeChannel.from_factors(channels.H, e_true, cfg.groups),
        "proposed": CascadeChannel.from_factors(est.H_, est.E_, cfg.groups),
        "conventional": CascadeChannel.from_composite(
            ls.Z_, cfg.n_bs, cfg.n_users, cfg.group_size, cfg.groups),
    }
    out = {}
    for name, csi in csis.items():
        solutions = {}
        for snr_d in snr_d_list:
            p_d = 10.0 ** (snr_d / 10.0)
            sol = optimize(csi, topology=topology, p_d=p_d)
            true_cascade = channels.cascade(1, sol.theta)
            sinrs = [sinr(sol, true_cascade, k, p_d, 1.0)
                     for k in range(cfg.n_users)]
            solutions[snr_d] = (sinrs, sol.objective)
        out[name] = solutions
    # diagonal restriction under perfect CSI, for the architecture comparison
    diag = {}
    for snr_d in snr_d_list:
        p_d = 10.0 ** (snr_d / 10.0)
        sol = optimize(csis["perfect"], topology="diagonal", p_d=p_d)
        true_cascade = channels.cascade(1, sol.theta)
        sinrs = [sinr(sol, true_cascade, k, p_d, 1.0)
                 for k in range(cfg.n_users)]
        diag[snr_d] = (sinrs, sol.objective)
    out["diagonal-perfect"] = diag
    return out


def scheme_data_fraction(csi_name, cfg):
    """Effective data-transmission ratio lambda of each CSI scheme."""
    if csi_name in ("perfect", "diagonal-perfect"):
        return 1.0
    arch = "FC" if cfg.groups == 1 else "GC"
    scheme = f"{arch}-PROP" if csi_name == "proposed" else f"{arch}-CONV"
    p_a = metrics.average_overhead(scheme, cfg)
    if p_a >= cfg.t_coherence:
        raise ValueError("pilot overhead exceeds the coherence interval")
    return (cfg.t_coherence - p_a) / cfg.t_coherence


def run_sumrate(spec: ExperimentSpec):
    """Average effective downlink sum rate per CSI scheme and SNR."""
    cfg = spec.system
    tasks = [(cfg, tuple(spec.snr_db_list), d) for d in range(spec.drops)]
    per_drop = _map_drops(_sumrate_drop, tasks, spec.parallelism)
    names = ["perfect", "proposed", "conventional", "diagonal-perfect"]
    rows = []
    extras = {"per_drop": per_drop}
    for name in names:
        lam = scheme_data_fraction(name, cfg)
        for snr_d in spec.snr_db_list:
            rates = [sum_rate(d[name][snr_d][0], lam) for d in per_drop]
            rows.append({"csi": name, "snr_db": float(snr_d),
                         "data_fraction": lam,
                         "mean_sum_rate": float(np.mean(rates)),
                         "drops": spec.drops})
            extras[(name, snr_d)] = np.array(rates)
    return ["csi", "snr_db", "data_fraction", "mean_sum_rate", "drops"], rows, extras


# --------------------------------------------------------------------------
# pilot overhead table
# --------------------------------------------------------------------------

OVERHEAD_GRID = (
    ("FC", 16, 1, 20),
    ("FC", 32, 1, 36),
    ("FC", 64, 1, 78),
    ("GC", 16, 2, 22),
    ("GC", 32, 2, 40),
    ("GC", 64, 2, 84),
)


def run_overhead(spec: ExperimentSpec):
    """Average pilot overhead of both schemes over the architecture grid."""
    cfg = spec.system
    rows = []
    for arch, m, groups, t in OVERHEAD_GRID:
        row_cfg = cfg.with_updates(n_ris=m, groups=groups, n_blocks=t)
        prop = metrics.average_overhead(f"{arch}-PROP", row_cfg)
        conv = metrics.average_overhead(f"{arch}-CONV", row_cfg)
        rows.append({
            "architecture": arch, "n_ris": m, "groups": groups,
            "t_blocks": t,
            "pa_proposed": float(prop), "pa_conventional": float(conv),
            "reduction_pct": float(metrics.overhead_reduction(prop, conv)),
        })
    fields = ["architecture", "n_ris", "groups", "t_blocks",
              "pa_proposed", "pa_conventional", "reduction_pct"]
    return fields, rows, {}
