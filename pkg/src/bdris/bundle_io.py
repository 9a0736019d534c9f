"""Flat-file exchange formats: channel bundles, books, weights, banks, CSV.

Binary payloads are little-endian float64 with complex arrays stored as
interleaved re/im pairs, preceded by a short ASCII header that carries the
dimensions; everything round-trips bit-exactly.
"""

import csv
import json

import numpy as np

from .aging import ArModel, PatternBank
from .reflections import PilotBook


def _write_complex(fh, arr):
    flat = np.asarray(arr, dtype=complex).ravel()
    out = np.empty(2 * flat.size, dtype="<f8")
    out[0::2] = flat.real
    out[1::2] = flat.imag
    out.tofile(fh)


def _read_complex(fh, shape):
    count = 2 * int(np.prod(shape))
    raw = np.fromfile(fh, dtype="<f8", count=count)
    if raw.size != count:
        raise ValueError("truncated binary payload")
    return (raw[0::2] + 1j * raw[1::2]).reshape(shape)


def save_channel_set(path, channels):
    from .channel import ChannelSet
    assert isinstance(channels, ChannelSet)
    n, m = channels.H.shape
    l, _, k = channels.E_series.shape
    with open(path, "wb") as fh:
        fh.write(b"BDRIS-CHANNELS 1\n")
        fh.write(f"{n} {m} {k} {l} {channels.f_n!r} "
                 f"{channels.beta_e!r} {channels.beta_h!r}\n".encode())
        _write_complex(fh, channels.H)
        _write_complex(fh, channels.E_series)
        _write_complex(fh, channels.R_RIS)
        _write_complex(fh, channels.R_BS)


def load_channel_set(path):
    from .channel import ChannelSet
    with open(path, "rb") as fh:
        magic = fh.readline().strip()
        if magic != b"BDRIS-CHANNELS 1":
            raise ValueError(f"not a channel bundle: {magic!r}")
        n, m, k, l, f_n, beta_e, beta_h = fh.readline().split()
        n, m, k, l = int(n), int(m), int(k), int(l)
        h = _read_complex(fh, (n, m))
        e_series = _read_complex(fh, (l, m, k))
        r_ris = _read_complex(fh, (m, m)).real
        r_bs = _read_complex(fh, (n, n)).real
    return ChannelSet(H=h, E_series=e_series, R_RIS=r_ris, R_BS=r_bs,
                      f_n=float(f_n), beta_e=float(beta_e), beta_h=float(beta_h))


def save_pilot_book(path, book):
    t = len(book)
    m = book.n_ris
    k = book.pilots.shape[0]
    schedule = book.schedule if book.schedule is not None else []
    with open(path, "wb") as fh:
        fh.write(b"BDRIS-BOOK 1\n")
        fh.write(f"{t} {m} {k} {book.groups} {int(book.feasible)}\n".encode())
        fh.write((" ".join(str(s) for s in schedule) or "-").encode() + b"\n")
        _write_complex(fh, np.stack(book.thetas))
        _write_complex(fh, book.pilots)


def load_pilot_book(path):
    with open(path, "rb") as fh:
        magic = fh.readline().strip()
        if magic != b"BDRIS-BOOK 1":
            raise ValueError(f"not a pilot book: {magic!r}")
        t, m, k, groups, feasible = (int(x) for x in fh.readline().split())
        sched_line = fh.readline().strip()
        schedule = None if sched_line == b"-" else [int(x) for x in sched_line.split()]
        thetas = list(_read_complex(fh, (t, m, m)))
        pilots = _read_complex(fh, (k, k))
    return PilotBook(thetas=thetas, pilots=pilots, groups=groups,
                     schedule=schedule, feasible=bool(feasible))


def save_network(path, network):
    """Flat binary weights with a layer-order header."""
    spec = network.spec()
    with open(path, "wb") as fh:
        fh.write(b"BDRIS-CNN 1\n")
        fh.write(json.dumps(spec).encode() + b"\n")
        for p in network.parameters():
            np.asarray(p, dtype="<f8").tofile(fh)


def load_network_weights(path, network):
    """Load weights saved by :func:`save_network` into a matching network."""
    with open(path, "rb") as fh:
        magic = fh.readline().strip()
        if magic != b"BDRIS-CNN 1":
            raise ValueError(f"not a weight file: {magic!r}")
        spec = json.loads(fh.readline().decode())
        if [list(x) for x in network.spec()] != [list(x) for x in spec]:
            raise ValueError("network architecture does not match the file")
        weights = []
        for _, shapes in spec:
            for shape in shapes:
                count = int(np.prod(shape))
                raw = np.fromfile(fh, dtype="<f8", count=count)
                if raw.size != count:
                    raise ValueError("truncated weight payload")
                weights.append(raw.reshape(shape))
    network.set_weights(weights)
    return network


def save_pattern_bank(path, bank):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["f_n", "order", "epsilon", "sigma2", "coefficients"])
        for f_n, model in bank.entries:
            coeffs = np.asarray(model.coeffs)
            if np.iscomplexobj(coeffs) and not np.allclose(coeffs.imag, 0.0):
                raise ValueError("bank serialization expects real AR coefficients")
            writer.writerow([repr(f_n), model.order, repr(model.epsilon),
                             repr(model.sigma2),
                             " ".join(repr(float(c.real)) for c in coeffs)])


def load_pattern_bank(path):
    from .aging import jakes_acf_sequence
    entries = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            f_n = float(row["f_n"])
            order = int(row["order"])
            coeffs = np.array([float(tok) for tok in row["coefficients"].split()])
            model = ArModel(order=order, coeffs=coeffs,
                            sigma2=float(row["sigma2"]),
                            epsilon=float(row["epsilon"]), f_n=f_n,
                            acf=jakes_acf_sequence(f_n, order))
            entries.append((f_n, model))
    return PatternBank(entries)


def _fmt(value):
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (np.floating,)):
        return repr(float(value))
    return value


def write_rows(path, fieldnames, rows):
    """Deterministic CSV writer (floats via repr, '\\n' line endings)."""
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fieldnames, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({key: _fmt(val) for key, val in row.items()})


def export_estimate(csv_path, estimator, summary_path=None):
    """Factor matrices as flattened re/im rows plus a JSON run summary."""
    rows = []
    for name, mat in (("H", estimator.H_), ("E", estimator.E_)):
        for (i, j), val in np.ndenumerate(mat):
            rows.append({"matrix": name, "row": i, "col": j,
                         "re": float(val.real), "im": float(val.imag)})
    write_rows(csv_path, ["matrix", "row", "col", "re", "im"], rows)
    if summary_path is not None:
        summary = {
            "iterations": list(estimator.n_iters_),
            "residual_history": [list(map(float, h)) for h in estimator.histories_],
            "converged": bool(estimator.converged_),
            "scaling_resolved": bool(estimator.scaling_resolved_),
        }
        with open(summary_path, "w") as fh:
            json.dump(summary, fh, indent=2, sort_keys=True)
            fh.write("\n")
