"""Encoder-decoder with a pointer-style copy head, in plain numpy.

Forward and backward passes are written out analytically; there is no
autodiff anywhere.  All arrays are float64.  Decoder inputs start from the
reserved id 0 token; targets are expected to end in the reserved id 1 token.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..base import InputError, NumericError, rng_for

GATES = 4  # input, forget, cell, output; fixed slice order


def _sigmoid(z):
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def softmax(z):
    z = np.asarray(z, dtype=np.float64)
    m = np.max(z)
    e = np.exp(z - m)
    return e / e.sum()


def log_softmax(z):
    z = np.asarray(z, dtype=np.float64)
    m = np.max(z)
    return z - (m + np.log(np.exp(z - m).sum()))


def _glorot(rng, rows, cols):
    limit = np.sqrt(6.0 / (rows + cols))
    return rng.uniform(-limit, limit, size=(rows, cols))


def _glorot_vec(rng, dim):
    limit = np.sqrt(6.0 / (dim + 1))
    return rng.uniform(-limit, limit, size=(dim,))


def init_params(config, rng=None):
    """Fresh parameter dictionary; forget-gate biases start at one."""
    if rng is None:
        rng = rng_for(config.seed, 0)
    E, H, L, F = config.embed_dim, config.hidden_dim, config.layers, config.ffnn_dim
    G = E + 2 * H  # token representation width
    p = {}
    p["src_emb"] = rng.normal(0.0, 0.1, size=(config.src_vocab, E))
    p["tgt_emb"] = rng.normal(0.0, 0.1, size=(config.tgt_vocab, E))

    def lstm(prefix, in_dim):
        p[f"{prefix}_W"] = _glorot(rng, GATES * H, in_dim)
        p[f"{prefix}_U"] = _glorot(rng, GATES * H, H)
        b = np.zeros(GATES * H)
        b[H:2 * H] = 1.0
        p[f"{prefix}_b"] = b

    for layer in range(L):
        in_dim = E if layer == 0 else 2 * H
        lstm(f"enc_fw_l{layer}", in_dim)
        lstm(f"enc_bw_l{layer}", in_dim)
    for layer in range(L):
        lstm(f"dec_l{layer}", E if layer == 0 else H)

    p["W_alpha"] = _glorot(rng, H, 2 * H)
    p["b_alpha"] = np.zeros(H)
    p["W_beta"] = _glorot(rng, H, 2 * H)

    p["g_W1"] = _glorot(rng, F, 3 * H)
    p["g_b1"] = np.zeros(F)
    p["g_W2"] = _glorot(rng, config.tgt_vocab, F)
    p["g_b2"] = np.zeros(config.tgt_vocab)

    for name, in_dim in (("c", G), ("p", G), ("a", 3 * G)):
        p[f"{name}_W1"] = _glorot(rng, F, in_dim)
        p[f"{name}_b1"] = np.zeros(F)
        p[f"{name}_W2"] = _glorot(rng, F, F)
        p[f"{name}_b2"] = np.zeros(F)
        p[f"w_{name}"] = _glorot_vec(rng, F)
    return {k: np.asarray(v, dtype=np.float64) for k, v in p.items()}


def zero_like_params(params):
    return {k: np.zeros_like(v) for k, v in params.items()}


# ---------------------------------------------------------------- LSTM

def lstm_forward(W, U, b, xs):
    """Run one direction over xs (T, in_dim) from zero initial state."""
    T = xs.shape[0]
    H = U.shape[1]
    zx = xs @ W.T + b
    hs = np.zeros((T, H))
    cache = {"xs": xs, "i": np.zeros((T, H)), "f": np.zeros((T, H)),
             "g": np.zeros((T, H)), "o": np.zeros((T, H)),
             "c": np.zeros((T, H)), "tc": np.zeros((T, H))}
    h = np.zeros(H)
    c = np.zeros(H)
    for t in range(T):
        z = zx[t] + U @ h
        i = _sigmoid(z[:H])
        f = _sigmoid(z[H:2 * H])
        g = np.tanh(z[2 * H:3 * H])
        o = _sigmoid(z[3 * H:])
        c = f * c + i * g
        tc = np.tanh(c)
        h = o * tc
        for key, val in (("i", i), ("f", f), ("g", g), ("o", o), ("c", c), ("tc", tc)):
            cache[key][t] = val
        hs[t] = h
    cache["hs"] = hs
    return hs, cache


def lstm_backward(W, U, b, cache, dhs, grads, prefix, h0=None):
    """Accumulate grads for one direction; returns (dxs, dh0).

    dhs carries per-step gradients arriving from outside the recurrence.
    h0 is the initial hidden state when it was not zero.
    """
    xs = cache["xs"]
    hs = cache["hs"]
    T, H = hs.shape
    if h0 is None:
        h0 = np.zeros(H)
    dxs = np.zeros_like(xs)
    dW = grads[f"{prefix}_W"]
    dU = grads[f"{prefix}_U"]
    db = grads[f"{prefix}_b"]
    dh_carry = np.zeros(H)
    dc_carry = np.zeros(H)
    for t in range(T - 1, -1, -1):
        i, f, g, o = cache["i"][t], cache["f"][t], cache["g"][t], cache["o"][t]
        tc = cache["tc"][t]
        c_prev = cache["c"][t - 1] if t > 0 else np.zeros(H)
        h_prev = hs[t - 1] if t > 0 else h0
        dh = dhs[t] + dh_carry
        do = dh * tc
        dc = dc_carry + dh * o * (1.0 - tc * tc)
        di = dc * g
        df = dc * c_prev
        dg = dc * i
        dz = np.concatenate([
            di * i * (1.0 - i),
            df * f * (1.0 - f),
            dg * (1.0 - g * g),
            do * o * (1.0 - o),
        ])
        dW += np.outer(dz, xs[t])
        dU += np.outer(dz, h_prev)
        db += dz
        dxs[t] = W.T @ dz
        dh_carry = U.T @ dz
        dc_carry = dc * f
    return dxs, dh_carry


# ------------------------------------------------------------- encoder

@dataclass
class EncoderPack:
    """Top-layer states plus everything the decoder and backward need."""

    states: np.ndarray      # (N, 2H) top-layer states
    fw_last: list           # per layer, final forward hidden state (H,)
    u: np.ndarray           # (N, H) generation attention keys
    v: np.ndarray           # (N, H) copy attention keys
    caches: list
    X: tuple


def encode(X, params, config) -> EncoderPack:
    if not X:
        raise InputError("cannot encode an empty source")
    X = tuple(int(i) for i in X)
    if max(X) >= config.src_vocab or min(X) < 0:
        raise InputError("source id out of vocabulary range")
    layer_in = params["src_emb"][list(X)]
    fw_last = []
    caches = []
    states = layer_in
    for layer in range(config.layers):
        fw_hs, fw_cache = lstm_forward(
            params[f"enc_fw_l{layer}_W"], params[f"enc_fw_l{layer}_U"],
            params[f"enc_fw_l{layer}_b"], layer_in)
        bw_hs_rev, bw_cache = lstm_forward(
            params[f"enc_bw_l{layer}_W"], params[f"enc_bw_l{layer}_U"],
            params[f"enc_bw_l{layer}_b"], layer_in[::-1])
        bw_hs = bw_hs_rev[::-1]
        states = np.concatenate([fw_hs, bw_hs], axis=1)
        fw_last.append(fw_hs[-1])
        caches.append((fw_cache, bw_cache))
        layer_in = states
    u = states @ params["W_alpha"].T + params["b_alpha"]
    v = states @ params["W_beta"].T
    return EncoderPack(states=states, fw_last=fw_last, u=u, v=v, caches=caches, X=X)


def encoder_backward(enc: EncoderPack, d_states, d_fw_last, params, config, grads):
    """Push gradients on top states and initial-state taps down to src_emb."""
    H = config.hidden_dim
    d_layer = d_states
    for layer in range(config.layers - 1, -1, -1):
        fw_cache, bw_cache = enc.caches[layer]
        d_fw = d_layer[:, :H].copy()
        d_bw = d_layer[:, H:].copy()
        d_fw[-1] += d_fw_last[layer]
        dxs_fw, _ = lstm_backward(
            params[f"enc_fw_l{layer}_W"], params[f"enc_fw_l{layer}_U"],
            params[f"enc_fw_l{layer}_b"], fw_cache, d_fw, grads, f"enc_fw_l{layer}")
        dxs_bw_rev, _ = lstm_backward(
            params[f"enc_bw_l{layer}_W"], params[f"enc_bw_l{layer}_U"],
            params[f"enc_bw_l{layer}_b"], bw_cache, d_bw[::-1], grads, f"enc_bw_l{layer}")
        d_layer = dxs_fw + dxs_bw_rev[::-1]
    np.add.at(grads["src_emb"], list(enc.X), d_layer)


# ----------------------------------------------------- scoring helpers

def _ffnn_pair(params, name, x):
    """Two tanh layers topped by a dot product; returns (score, cache)."""
    a1 = np.tanh(params[f"{name}_W1"] @ x + params[f"{name}_b1"])
    a2 = np.tanh(params[f"{name}_W2"] @ a1 + params[f"{name}_b2"])
    return float(params[f"w_{name}"] @ a2), (x, a1, a2)


def _ffnn_pair_backward(params, name, cache, dscore, grads):
    """Returns gradient on the input vector."""
    x, a1, a2 = cache
    grads[f"w_{name}"] += dscore * a2
    da2 = dscore * params[f"w_{name}"]
    dp2 = da2 * (1.0 - a2 * a2)
    grads[f"{name}_W2"] += np.outer(dp2, a1)
    grads[f"{name}_b2"] += dp2
    da1 = params[f"{name}_W2"].T @ dp2
    dp1 = da1 * (1.0 - a1 * a1)
    grads[f"{name}_W1"] += np.outer(dp1, x)
    grads[f"{name}_b1"] += dp1
    return params[f"{name}_W1"].T @ dp1


def copy_scores(gamma_t, cand_gammas, params):
    """Copy logits over the empty choice plus each candidate, and P_c.

    Index 0 is the empty assignment with a fixed zero logit; candidate j
    of cand_gammas is at index j + 1.
    """
    logits = np.zeros(1 + len(cand_gammas))
    sc, _ = _ffnn_pair(params, "c", gamma_t)
    for j, gk in enumerate(cand_gammas):
        sp, _ = _ffnn_pair(params, "p", gk)
        sa, _ = _ffnn_pair(params, "a", np.concatenate([gamma_t, gk, gamma_t * gk]))
        logits[j + 1] = sc + sp + sa
    return logits, softmax(logits)


# ------------------------------------------------ teacher-forced pass

def candidate_positions(heads, t):
    """Strictly earlier positions whose token is a permissible antecedent."""
    return [k for k in range(t) if heads[k]]


def forward_pass(example, params, config, mu):
    """Teacher-forced loss over one example, with caches for backward."""
    E, H, L = config.embed_dim, config.hidden_dim, config.layers
    Y = example.Y
    M = len(Y)
    if max(Y) >= config.tgt_vocab or min(Y) < 0:
        raise InputError("target id out of vocabulary range")
    enc = encode(example.X, params, config)
    hs, u, v = enc.states, enc.u, enc.v

    prev_ids = [0] + [Y[t - 1] for t in range(1, M)]
    h_state = [enc.fw_last[layer].copy() for layer in range(L)]
    c_state = [np.zeros(H) for _ in range(L)]
    dec_cache = [
        {"x": np.zeros((M, E if layer == 0 else H)),
         "i": np.zeros((M, H)), "f": np.zeros((M, H)), "g": np.zeros((M, H)),
         "o": np.zeros((M, H)), "c": np.zeros((M, H)), "tc": np.zeros((M, H)),
         "hs": np.zeros((M, H))}
        for layer in range(L)
    ]
    alphas = np.zeros((M, hs.shape[0]))
    betas = np.zeros((M, hs.shape[0]))
    s_all = np.zeros((M, H))
    gin_all = np.zeros((M, 3 * H))
    ga1_all = np.zeros((M, config.ffnn_dim))
    gp_all = np.zeros((M, config.tgt_vocab))
    gammas = np.zeros((M, E + 2 * H))

    loss = 0.0
    for t in range(M):
        x = params["tgt_emb"][prev_ids[t]]
        for layer in range(L):
            cc = dec_cache[layer]
            W = params[f"dec_l{layer}_W"]
            U = params[f"dec_l{layer}_U"]
            b = params[f"dec_l{layer}_b"]
            z = W @ x + U @ h_state[layer] + b
            i = _sigmoid(z[:H])
            f = _sigmoid(z[H:2 * H])
            g = np.tanh(z[2 * H:3 * H])
            o = _sigmoid(z[3 * H:])
            c = f * c_state[layer] + i * g
            tc = np.tanh(c)
            h = o * tc
            cc["x"][t] = x
            for key, val in (("i", i), ("f", f), ("g", g), ("o", o), ("c", c), ("tc", tc)):
                cc[key][t] = val
            cc["hs"][t] = h
            h_state[layer] = h
            c_state[layer] = c
            x = h
        s_t = h_state[L - 1]
        s_all[t] = s_t

        alpha = softmax(u @ s_t)
        c_t = alpha @ hs
        gin = np.concatenate([s_t, c_t])
        ga1 = np.tanh(params["g_W1"] @ gin + params["g_b1"])
        glog = params["g_W2"] @ ga1 + params["g_b2"]
        glp = log_softmax(glog)
        loss += -glp[Y[t]]
        alphas[t] = alpha
        gin_all[t] = gin
        ga1_all[t] = ga1
        gp_all[t] = np.exp(glp)

        beta = softmax(v @ s_t)
        o_t = beta @ hs
        betas[t] = beta
        gammas[t] = np.concatenate([params["tgt_emb"][Y[t]], o_t])

    copy_cache = {}
    if mu != 0.0 and example.A:
        p_cache = {}
        for t in sorted(example.A):
            cands = candidate_positions(example.heads, t)
            target = example.A[t]
            if target not in cands:
                raise InputError(
                    f"assignment at step {t} points to {target}, "
                    "which is not a preceding head token")
            sc, c_cache = _ffnn_pair(params, "c", gammas[t])
            logits = np.zeros(1 + len(cands))
            a_caches = []
            for j, k in enumerate(cands):
                if k not in p_cache:
                    p_cache[k] = _ffnn_pair(params, "p", gammas[k])
                sp = p_cache[k][0]
                pair_in = np.concatenate([gammas[t], gammas[k], gammas[t] * gammas[k]])
                sa, a_cache = _ffnn_pair(params, "a", pair_in)
                logits[j + 1] = sc + sp + sa
                a_caches.append(a_cache)
            clp = log_softmax(logits)
            loss += -mu * clp[1 + cands.index(target)]
            copy_cache[t] = {
                "cands": cands, "probs": np.exp(clp), "target": target,
                "c_cache": c_cache, "a_caches": a_caches,
            }
        copy_cache["__p__"] = p_cache

    if not np.isfinite(loss):
        raise NumericError("loss is not finite")
    cache = {
        "example": example, "config": config, "mu": mu, "enc": enc,
        "prev_ids": prev_ids, "dec": dec_cache, "alphas": alphas,
        "betas": betas, "s": s_all, "gin": gin_all, "ga1": ga1_all,
        "gp": gp_all, "gammas": gammas, "copy": copy_cache,
    }
    return float(loss), cache


def sequence_nll(example, params, config, mu):
    """Negative log likelihood of one example under teacher forcing."""
    loss, _ = forward_pass(example, params, config, mu)
    return loss


def backward_pass(cache, params):
    """Analytic gradients of forward_pass's loss; mirrors its structure."""
    example = cache["example"]
    config = cache["config"]
    mu = cache["mu"]
    enc = cache["enc"]
    E, H, L = config.embed_dim, config.hidden_dim, config.layers
    Y = example.Y
    M = len(Y)
    hs, u, v = enc.states, enc.u, enc.v
    N = hs.shape[0]

    grads = zero_like_params(params)
    d_hs = np.zeros((N, 2 * H))
    d_u = np.zeros((N, H))
    d_v = np.zeros((N, H))
    d_gamma = np.zeros((M, E + 2 * H))
    ds_extra = np.zeros((M, H))

    # Copy-loss terms first: they touch only the gamma vectors.
    if mu != 0.0 and example.A:
        copy_cache = cache["copy"]
        p_cache = copy_cache["__p__"]
        dsp = {}
        for t in sorted(example.A):
            cc = copy_cache[t]
            cands, probs = cc["cands"], cc["probs"]
            dlogits = mu * probs
            dlogits[1 + cands.index(cc["target"])] -= mu
            dsc = 0.0
            for j, k in enumerate(cands):
                dl = dlogits[j + 1]
                if dl == 0.0:
                    continue
                dsc += dl
                dsp[k] = dsp.get(k, 0.0) + dl
                d_in = _ffnn_pair_backward(params, "a", cc["a_caches"][j], dl, grads)
                G = E + 2 * H
                d_gamma[t] += d_in[:G] + d_in[2 * G:] * cache["gammas"][k]
                d_gamma[k] += d_in[G:2 * G] + d_in[2 * G:] * cache["gammas"][t]
            d_gamma[t] += _ffnn_pair_backward(params, "c", cc["c_cache"], dsc, grads)
        for k, dval in dsp.items():
            d_gamma[k] += _ffnn_pair_backward(params, "p", p_cache[k][1], dval, grads)

    # Generation loss and both attentions, step by step.
    for t in range(M):
        dglog = cache["gp"][t].copy()
        dglog[Y[t]] -= 1.0
        ga1 = cache["ga1"][t]
        grads["g_b2"] += dglog
        grads["g_W2"] += np.outer(dglog, ga1)
        da1 = params["g_W2"].T @ dglog
        dp1 = da1 * (1.0 - ga1 * ga1)
        grads["g_W1"] += np.outer(dp1, cache["gin"][t])
        grads["g_b1"] += dp1
        dgin = params["g_W1"].T @ dp1
        ds_extra[t] += dgin[:H]
        dc_t = dgin[H:]

        alpha = cache["alphas"][t]
        s_t = cache["s"][t]
        dalpha = hs @ dc_t
        d_hs += np.outer(alpha, dc_t)
        dascore = alpha * (dalpha - float(alpha @ dalpha))
        ds_extra[t] += dascore @ u
        d_u += np.outer(dascore, s_t)

        grads["tgt_emb"][Y[t]] += d_gamma[t, :E]
        do_t = d_gamma[t, E:]
        if np.any(do_t):
            beta = cache["betas"][t]
            dbeta = hs @ do_t
            d_hs += np.outer(beta, do_t)
            dbscore = beta * (dbeta - float(beta @ dbeta))
            ds_extra[t] += dbscore @ v
            d_v += np.outer(dbscore, s_t)

    # Decoder BPTT layer by layer, top down.
    d_layer = ds_extra
    d_fw_last = [np.zeros(H) for _ in range(L)]
    for layer in range(L - 1, -1, -1):
        cc = cache["dec"][layer]
        dxs, dh0 = lstm_backward(
            params[f"dec_l{layer}_W"], params[f"dec_l{layer}_U"],
            params[f"dec_l{layer}_b"],
            {"xs": cc["x"], "hs": cc["hs"], "i": cc["i"], "f": cc["f"],
             "g": cc["g"], "o": cc["o"], "c": cc["c"], "tc": cc["tc"]},
            d_layer, grads, f"dec_l{layer}", h0=enc.fw_last[layer])
        d_fw_last[layer] = dh0
        d_layer = dxs
    np.add.at(grads["tgt_emb"], cache["prev_ids"], d_layer)

    # Attention keys back to the shared projection weights.
    grads["W_alpha"] += d_u.T @ hs
    grads["b_alpha"] += d_u.sum(axis=0)
    d_hs += d_u @ params["W_alpha"]
    grads["W_beta"] += d_v.T @ hs
    d_hs += d_v @ params["W_beta"]

    encoder_backward(enc, d_hs, d_fw_last, params, config, grads)
    return grads


def loss_and_grads(example, params, config, mu):
    loss, cache = forward_pass(example, params, config, mu)
    return loss, backward_pass(cache, params)


# ------------------------------------------------------------ decoding

@dataclass
class DecoderStep:
    """Everything one decoder step produces."""

    state: tuple            # ((h, c) per layer) after the step
    s: np.ndarray           # top-layer hidden state
    alpha: np.ndarray       # generation attention weights
    gen_context: np.ndarray
    p_gen: np.ndarray       # distribution over target ids
    beta: np.ndarray        # copy attention weights
    copy_context: np.ndarray


def init_decoder_state(enc: EncoderPack, config):
    H = config.hidden_dim
    return tuple((enc.fw_last[layer].copy(), np.zeros(H)) for layer in range(config.layers))


def decode_step(prev_id, state, enc: EncoderPack, params, config) -> DecoderStep:
    """One inference step from the previous token id and layer states."""
    H, L = config.hidden_dim, config.layers
    x = params["tgt_emb"][int(prev_id)]
    new_state = []
    for layer in range(L):
        h_prev, c_prev = state[layer]
        z = (params[f"dec_l{layer}_W"] @ x
             + params[f"dec_l{layer}_U"] @ h_prev
             + params[f"dec_l{layer}_b"])
        i = _sigmoid(z[:H])
        f = _sigmoid(z[H:2 * H])
        g = np.tanh(z[2 * H:3 * H])
        o = _sigmoid(z[3 * H:])
        c = f * c_prev + i * g
        h = o * np.tanh(c)
        new_state.append((h, c))
        x = h
    s_t = new_state[-1][0]
    alpha = softmax(enc.u @ s_t)
    c_t = alpha @ enc.states
    gin = np.concatenate([s_t, c_t])
    ga1 = np.tanh(params["g_W1"] @ gin + params["g_b1"])
    p_gen = softmax(params["g_W2"] @ ga1 + params["g_b2"])
    beta = softmax(enc.v @ s_t)
    o_t = beta @ enc.states
    return DecoderStep(state=tuple(new_state), s=s_t, alpha=alpha,
                       gen_context=c_t, p_gen=p_gen, beta=beta, copy_context=o_t)


def token_repr(token_id, copy_context, params):
    """The representation scored by the copy head: embedding plus context."""
    return np.concatenate([params["tgt_emb"][int(token_id)], copy_context])


def forced_assignments(example, params, config):
    """Predict an antecedent for every assigned step, targets held fixed.

    Returns {step: predicted antecedent or None}; None means no candidate
    preceded the step.  Prediction is the highest-scoring candidate, never
    the empty choice.
    """
    if not example.A:
        return {}
    _, cache = forward_pass(example, params, config, mu=0.0)
    gammas = cache["gammas"]
    out = {}
    for t in sorted(example.A):
        cands = candidate_positions(example.heads, t)
        if not cands:
            out[t] = None
            continue
        logits, _ = copy_scores(gammas[t], [gammas[k] for k in cands], params)
        out[t] = cands[int(np.argmax(logits[1:]))]
    return out


def greedy_decode(X, params, config, tgt_vocab, max_len=200):
    """Greedy generation with antecedent prediction at emitted bullets.

    Returns (token ids without the end marker, {position: antecedent}).
    """
    from ..linearized import BULLET_ASCII

    enc = encode(X, params, config)
    state = init_decoder_state(enc, config)
    try:
        bullet_id = tgt_vocab.id(BULLET_ASCII)
    except InputError:
        bullet_id = None
    ids = []
    heads = []
    gammas = []
    assignments = {}
    prev = 0
    for _ in range(max_len):
        step = decode_step(prev, state, enc, params, config)
        state = step.state
        y_t = int(np.argmax(step.p_gen))
        if y_t == 1:
            break
        gamma_t = token_repr(y_t, step.copy_context, params)
        if y_t == bullet_id:
            cands = [k for k in range(len(ids)) if heads[k]]
            if cands:
                logits, _ = copy_scores(gamma_t, [gammas[k] for k in cands], params)
                assignments[len(ids)] = cands[int(np.argmax(logits[1:]))]
        ids.append(y_t)
        heads.append(bool(tgt_vocab.head_flags[y_t]))
        gammas.append(gamma_t)
        prev = y_t
    return tuple(ids), assignments
