"""Small convolutional network for aging-pattern recognition, numpy only.

Architecture family: stride-1 valid convolutions with tanh, a flatten, two
sigmoid hidden layers and a linear output scored against one-hot targets
under a mean-squared-error loss, trained with Adam and early stopping.
Everything runs in float64 so analytic gradients can be checked against
central finite differences tightly.
"""

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from sklearn.base import BaseEstimator, ClassifierMixin


def _kernel_pair(ksize):
    if np.isscalar(ksize):
        return int(ksize), int(ksize)
    kh, kw = ksize
    return int(kh), int(kw)


class Conv2D:
    """Valid convolution, stride 1, weights (out_ch, in_ch, kh, kw).

    ``ksize`` may be an int or an (height, width) pair; wide kernels let
    one layer span several user columns of the stacked-CSI input.
    """

    def __init__(self, in_ch, out_ch, ksize, rng):
        kh, kw = _kernel_pair(ksize)
        fan_in = in_ch * kh * kw
        self.w = rng.standard_normal((out_ch, in_ch, kh, kw)) / np.sqrt(fan_in)
        self.b = np.zeros(out_ch)
        self.ksize = (kh, kw)

    def forward(self, x):
        kh, kw = self.ksize
        windows = sliding_window_view(x, (kh, kw), axis=(2, 3))
        # (B, C, H', W', kh, kw) -> (B, H', W', C*kh*kw)
        cols = windows.transpose(0, 2, 3, 1, 4, 5).reshape(
            x.shape[0], windows.shape[2], windows.shape[3], -1)
        wmat = self.w.reshape(self.w.shape[0], -1)
        out = cols @ wmat.T + self.b
        self._cache = (x.shape, cols)
        return out.transpose(0, 3, 1, 2)

    def backward(self, grad):
        x_shape, cols = self._cache
        kh, kw = self.ksize
        g = grad.transpose(0, 2, 3, 1)                    # (B, H', W', O)
        wmat = self.w.reshape(self.w.shape[0], -1)
        self.gw = (g.reshape(-1, g.shape[-1]).T @ cols.reshape(-1, cols.shape[-1])
                   ).reshape(self.w.shape)
        self.gb = g.sum(axis=(0, 1, 2))
        dcols = g @ wmat                                   # (B, H', W', C*kh*kw)
        b, hp, wp, _ = dcols.shape
        dcols = dcols.reshape(b, hp, wp, self.w.shape[1], kh, kw)
        dx = np.zeros(x_shape)
        for i in range(kh):
            for j in range(kw):
                dx[:, :, i:i + hp, j:j + wp] += dcols[:, :, :, :, i, j].transpose(
                    0, 3, 1, 2)
        return dx

    def params(self):
        return [("w", self.w), ("b", self.b)]

    def grads(self):
        return [self.gw, self.gb]


class Dense:
    def __init__(self, n_in, n_out, rng):
        self.w = rng.standard_normal((n_in, n_out)) / np.sqrt(n_in)
        self.b = np.zeros(n_out)

    def forward(self, x):
        self._x = x
        return x @ self.w + self.b

    def backward(self, grad):
        self.gw = self._x.T @ grad
        self.gb = grad.sum(axis=0)
        return grad @ self.w.T

    def params(self):
        return [("w", self.w), ("b", self.b)]

    def grads(self):
        return [self.gw, self.gb]


class Tanh:
    def forward(self, x):
        self._y = np.tanh(x)
        return self._y

    def backward(self, grad):
        return grad * (1.0 - self._y ** 2)

    def params(self):
        return []

    def grads(self):
        return []


class Sigmoid:
    def forward(self, x):
        self._y = 1.0 / (1.0 + np.exp(-x))
        return self._y

    def backward(self, grad):
        return grad * self._y * (1.0 - self._y)

    def params(self):
        return []

    def grads(self):
        return []


class Flatten:
    def forward(self, x):
        self._shape = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, grad):
        return grad.reshape(self._shape)

    def params(self):
        return []

    def grads(self):
        return []


class AvgPool2D:
    """Non-overlapping average pooling; trailing rows/cols are dropped.

    Pooling the conv maps before the dense stage turns locally detected
    frame-to-frame variation into the spatially aggregated statistics the
    Doppler classes differ by, and keeps the dense stage small.
    """

    def __init__(self, pool):
        self.pool = _kernel_pair(pool)

    def forward(self, x):
        ph, pw = self.pool
        b, c, h, w = x.shape
        hp, wp = h // ph, w // pw
        self._in_shape = x.shape
        trimmed = x[:, :, :hp * ph, :wp * pw]
        return trimmed.reshape(b, c, hp, ph, wp, pw).mean(axis=(3, 5))

    def backward(self, grad):
        ph, pw = self.pool
        b, c, h, w = self._in_shape
        hp, wp = grad.shape[2], grad.shape[3]
        dx = np.zeros(self._in_shape)
        spread = grad[:, :, :, None, :, None] / (ph * pw)
        dx[:, :, :hp * ph, :wp * pw] = np.broadcast_to(
            spread, (b, c, hp, ph, wp, pw)).reshape(b, c, hp * ph, wp * pw)
        return dx

    def params(self):
        return []

    def grads(self):
        return []


class Network:
    """Plain sequential container with an MSE head."""

    def __init__(self, layers):
        self.layers = layers

    def forward(self, x):
        for layer in self.layers:
            x = layer.forward(x)
        return x

    def loss_and_grads(self, x, targets):
        """Mean-squared-error loss and parameter gradients for one batch."""
        pred = self.forward(x)
        diff = pred - targets
        loss = float(np.mean(diff ** 2))
        grad = 2.0 * diff / diff.size
        for layer in reversed(self.layers):
            grad = layer.backward(grad)
        return loss, [g for layer in self.layers for g in layer.grads()]

    def parameters(self):
        return [p for layer in self.layers for _, p in layer.params()]

    def get_weights(self):
        return [p.copy() for p in self.parameters()]

    def set_weights(self, weights):
        for p, w in zip(self.parameters(), weights):
            p[...] = w

    def spec(self):
        """Layer-order description used by the flat binary weight format."""
        out = []
        for layer in self.layers:
            name = type(layer).__name__
            shapes = [list(p.shape) for _, p in layer.params()]
            out.append((name, shapes))
        return out


def build_network(input_shape, n_classes, conv_channels=(8, 16), ksize=3,
                  hidden=(64, 32), pool_to=(2, 4), rng=None):
    """The default classifier family; kernel counts and widths are knobs.

    ``pool_to`` is the (rows, cols) grid the conv maps are averaged down to
    before the dense stage (None disables pooling).
    """
    rng = np.random.default_rng(rng) if not isinstance(rng, np.random.Generator) else rng
    kh, kw = _kernel_pair(ksize)
    h, w = input_shape
    layers = []
    in_ch = 1
    for out_ch in conv_channels:
        layers += [Conv2D(in_ch, out_ch, (kh, kw), rng), Tanh()]
        in_ch = out_ch
        h -= kh - 1
        w -= kw - 1
        if h < 1 or w < 1:
            raise ValueError("input too small for the convolution stack")
    if pool_to is not None:
        ph = max(1, h // max(1, min(pool_to[0], h)))
        pw = max(1, w // max(1, min(pool_to[1], w)))
        if ph > 1 or pw > 1:
            layers.append(AvgPool2D((ph, pw)))
            h, w = h // ph, w // pw
    layers.append(Flatten())
    n_feat = in_ch * h * w
    for n_hidden in hidden:
        layers += [Dense(n_feat, n_hidden, rng), Sigmoid()]
        n_feat = n_hidden
    layers.append(Dense(n_feat, n_classes, rng))
    return Network(layers)


class Adam:
    """Adaptive moment estimation on the network's parameter list."""

    def __init__(self, params, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        self.params = params
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0

    def step(self, grads):
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        for p, g, m, v in zip(self.params, grads, self.m, self.v):
            m[...] = b1 * m + (1 - b1) * g
            v[...] = b2 * v + (1 - b2) * g * g
            m_hat = m / (1 - b1 ** self.t)
            v_hat = v / (1 - b2 ** self.t)
            p -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


class TrainingDiverged(RuntimeError):
    pass


def train(net, x_train, y_train, x_val, y_val, lr=1e-3, batch_size=50,
          max_epochs=300, patience=25, rng=None, min_epochs=1):
    """Adam + early stopping; restores the best validation weights.

    Raises :class:`TrainingDiverged` when the loss leaves the reals, with
    the offending hyperparameters in the message.
    """
    rng = np.random.default_rng(rng) if not isinstance(rng, np.random.Generator) else rng
    opt = Adam(net.parameters(), lr=lr)
    n = x_train.shape[0]
    initial_val = float(np.mean((net.forward(x_val) - y_val) ** 2))
    best_val = np.inf
    best_weights = net.get_weights()
    since_best = 0
    history = {"train_loss": [], "val_loss": [], "initial_val_loss": initial_val}
    for epoch in range(max_epochs):
        order = rng.permutation(n)
        epoch_loss = 0.0
        for start in range(0, n, batch_size):
            idx = order[start:start + batch_size]
            loss, grads = net.loss_and_grads(x_train[idx], y_train[idx])
            if not np.isfinite(loss):
                raise TrainingDiverged(
                    f"training loss diverged at epoch {epoch} "
                    f"(lr={lr}, batch_size={batch_size})"
                )
            opt.step(grads)
            epoch_loss += loss * len(idx)
        history["train_loss"].append(epoch_loss / n)
        val_pred = net.forward(x_val)
        val_loss = float(np.mean((val_pred - y_val) ** 2))
        history["val_loss"].append(val_loss)
        if val_loss < best_val - 1e-12:
            best_val = val_loss
            best_weights = net.get_weights()
            since_best = 0
        else:
            since_best += 1
            if since_best >= patience and epoch + 1 >= min_epochs:
                break
    net.set_weights(best_weights)
    history["best_val_loss"] = best_val
    # flags a run whose losses never meaningfully improved (rate too high)
    history["stalled"] = bool(best_val > 0.8 * initial_val)
    return history


def gradient_check(net, x, targets, step=1e-6):
    """Max relative error between analytic and central-difference gradients."""
    _, grads = net.loss_and_grads(x, targets)
    worst = 0.0
    for p, g in zip(net.parameters(), grads):
        flat_p = p.ravel()
        flat_g = g.ravel()
        for i in range(flat_p.size):
            keep = flat_p[i]
            flat_p[i] = keep + step
            up = net.loss_and_grads(x, targets)[0]
            flat_p[i] = keep - step
            down = net.loss_and_grads(x, targets)[0]
            flat_p[i] = keep
            numeric = (up - down) / (2 * step)
            denom = max(abs(numeric), abs(flat_g[i]), 1e-8)
            worst = max(worst, abs(numeric - flat_g[i]) / denom)
    return worst


def one_hot(labels, n_classes):
    out = np.zeros((len(labels), n_classes))
    out[np.arange(len(labels)), labels] = 1.0
    return out


class DopplerCnnClassifier(BaseEstimator, ClassifierMixin):
    """sklearn-style wrapper: fit on preprocessed CSI images, predict classes.

    ``X`` is (n_samples, height, width) real; ``y`` holds integer class
    indices.  Scores are the raw linear outputs; prediction is their argmax
    (ties resolve to the lowest class index).
    """

    def __init__(self, conv_channels=(8, 16), kernel_size=3, hidden=(64, 32),
                 pool_to=(2, 4), learning_rate=1e-3, batch_size=50,
                 max_epochs=300, patience=25, val_fraction=0.2,
                 random_state=None):
        self.conv_channels = conv_channels
        self.kernel_size = kernel_size
        self.hidden = hidden
        self.pool_to = pool_to
        self.learning_rate = learning_rate
        self.batch_size = batch_size
        self.max_epochs = max_epochs
        self.patience = patience
        self.val_fraction = val_fraction
        self.random_state = random_state

    def fit(self, X, y):
        X = np.asarray(X, dtype=float)
        y = np.asarray(y)
        self.classes_ = np.unique(y)
        labels = np.searchsorted(self.classes_, y)
        n_classes = len(self.classes_)
        rng = np.random.default_rng(self.random_state)
        order = rng.permutation(len(X))
        n_val = max(1, int(round(self.val_fraction * len(X))))
        val_idx, train_idx = order[:n_val], order[n_val:]
        x4 = X[:, None, :, :]
        targets = one_hot(labels, n_classes)
        self.network_ = build_network(
            X.shape[1:], n_classes, conv_channels=self.conv_channels,
            ksize=self.kernel_size, hidden=self.hidden, pool_to=self.pool_to,
            rng=rng)
        self.history_ = train(
            self.network_, x4[train_idx], targets[train_idx],
            x4[val_idx], targets[val_idx], lr=self.learning_rate,
            batch_size=self.batch_size, max_epochs=self.max_epochs,
            patience=self.patience, rng=rng)
        return self

    def decision_scores(self, X):
        X = np.asarray(X, dtype=float)
        return self.network_.forward(X[:, None, :, :])

    def predict(self, X):
        return self.classes_[np.argmax(self.decision_scores(X), axis=1)]

    def score(self, X, y):
        return float(np.mean(self.predict(X) == np.asarray(y)))
