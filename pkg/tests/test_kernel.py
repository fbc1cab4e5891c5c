"""Kernel numerics: components, gradient fidelity, training, persistence."""

import numpy as np
import pytest

from semkit.base import InputError, NotFittedError, NumericError
from semkit.kernel import (BOS, EOS, CopyParser, ModelConfig, TrainingExample,
                           TrainingPlan, Vocab, assignment_accuracy, build_vocab,
                           copy_scores, decode_step, encode, forced_assignments,
                           grad_check, greedy_decode, init_decoder_state,
                           init_params, load_model, loss_and_grads, mean_loss,
                           save_model, sequence_nll, synth_dataset, token_repr,
                           toy_example, train)


def tiny_config(**kw):
    base = dict(src_vocab=9, tgt_vocab=10, embed_dim=5, hidden_dim=4,
                layers=1, ffnn_dim=4, seed=0)
    base.update(kw)
    return ModelConfig(**base)


class TestConfigTypes:
    def test_dims_must_be_positive(self):
        with pytest.raises(InputError):
            ModelConfig(src_vocab=0, tgt_vocab=10)
        with pytest.raises(InputError):
            ModelConfig(src_vocab=9, tgt_vocab=10, hidden_dim=0)

    def test_vocab_rejects_duplicates(self):
        with pytest.raises(InputError):
            Vocab(("a", "a"), (False, False))

    def test_vocab_rejects_misaligned_flags(self):
        with pytest.raises(InputError):
            Vocab(("a", "b"), (False,))

    def test_vocab_lookup_and_heads(self):
        v = Vocab(("x", "y_h", "@b"), (False, True, True))
        assert v.id("y_h") == 1
        assert v.ids(("x", "@b")) == (0, 2)
        assert v.head_ids() == {1, 2}
        with pytest.raises(InputError):
            v.id("nope")

    def test_build_vocab_specials_first(self):
        v = build_vocab([["a", "b"], ["b", "c"]], specials=("<s>", "</s>"),
                        head_of=lambda t: t == "b")
        assert v.tokens == ("<s>", "</s>", "a", "b", "c")
        assert v.head_flags == (False, False, False, True, False)

    def test_example_rejects_forward_assignment(self):
        with pytest.raises(InputError):
            TrainingExample(X=(1,), Y=(2, 3, 1), A={1: 2}, heads=(True, True, False))

    def test_example_rejects_misaligned_heads(self):
        with pytest.raises(InputError):
            TrainingExample(X=(1,), Y=(2, 1), A={}, heads=(True,))


class TestEncode:
    def test_empty_source_rejected(self):
        config = tiny_config()
        with pytest.raises(InputError):
            encode((), init_params(config), config)

    def test_out_of_range_id_rejected(self):
        config = tiny_config()
        with pytest.raises(InputError):
            encode((9,), init_params(config), config)

    def test_single_token_shape(self):
        config = tiny_config()
        enc = encode((3,), init_params(config), config)
        assert enc.states.shape == (1, 2 * config.hidden_dim)

    def test_reversal_swaps_direction_roles(self):
        # With the two direction LSTMs sharing weights, encoding the
        # reversed source reproduces the same states with halves swapped.
        config = tiny_config()
        params = init_params(config)
        for sfx in ("W", "U", "b"):
            params[f"enc_bw_l0_{sfx}"] = params[f"enc_fw_l0_{sfx}"].copy()
        X = (1, 2, 3, 4, 5, 2)
        H = config.hidden_dim
        sx = encode(X, params, config).states
        sy = encode(X[::-1], params, config).states[::-1]
        assert np.allclose(sx[:, :H], sy[:, H:], rtol=0, atol=1e-12)
        assert np.allclose(sx[:, H:], sy[:, :H], rtol=0, atol=1e-12)

    def test_deterministic(self):
        config = tiny_config()
        params = init_params(config)
        a = encode((1, 2, 3), params, config).states
        b = encode((1, 2, 3), params, config).states
        assert np.array_equal(a, b)


class TestDecodeStep:
    def test_singleton_source_attention_is_one(self):
        config = tiny_config()
        params = init_params(config)
        enc = encode((4,), params, config)
        step = decode_step(0, init_decoder_state(enc, config), enc, params, config)
        assert step.alpha.tolist() == [1.0]
        assert step.beta.tolist() == [1.0]

    def test_p_gen_is_a_distribution(self):
        config = tiny_config(hidden_dim=8, layers=2)
        params = init_params(config)
        enc = encode((1, 5, 2, 7), params, config)
        state = init_decoder_state(enc, config)
        prev = 0
        for _ in range(6):
            step = decode_step(prev, state, enc, params, config)
            assert abs(step.p_gen.sum() - 1.0) <= 1e-12
            assert (step.p_gen >= 0).all()
            state = step.state
            prev = int(np.argmax(step.p_gen))

    def test_uniform_states_make_context_the_common_value(self):
        config = tiny_config()
        params = init_params(config)
        enc = encode((1, 2, 3, 4), params, config)
        enc.states = np.tile(enc.states[0], (4, 1))
        enc.u = enc.states @ params["W_alpha"].T + params["b_alpha"]
        enc.v = enc.states @ params["W_beta"].T
        step = decode_step(0, init_decoder_state(enc, config), enc, params, config)
        assert np.allclose(step.gen_context, enc.states[0], atol=1e-12)
        assert np.allclose(step.copy_context, enc.states[0], atol=1e-12)


class TestCopyScores:
    def setup_method(self):
        self.config = tiny_config()
        self.params = init_params(self.config)
        rng = np.random.default_rng(5)
        G = self.config.embed_dim + 2 * self.config.hidden_dim
        self.gammas = rng.normal(size=(4, G))

    def test_no_candidates_yields_empty_choice(self):
        logits, probs = copy_scores(self.gammas[0], [], self.params)
        assert logits.tolist() == [0.0]
        assert probs.tolist() == [1.0]

    def test_empty_choice_logit_fixed_at_zero(self):
        logits, _ = copy_scores(self.gammas[0], list(self.gammas[1:]), self.params)
        assert logits[0] == 0.0

    def test_distribution_sums_to_one(self):
        _, probs = copy_scores(self.gammas[0], list(self.gammas[1:]), self.params)
        assert abs(probs.sum() - 1.0) <= 1e-12
        assert (probs >= 0).all()

    def test_duplicate_candidates_score_identically(self):
        logits, _ = copy_scores(self.gammas[0],
                                [self.gammas[1], self.gammas[1]], self.params)
        assert logits[1] == logits[2]

    def test_current_token_term_shifts_candidates_equally(self):
        # Zeroing the copy-worthiness projection changes every non-empty
        # logit by the same constant, so candidate ranking is unchanged.
        logits, _ = copy_scores(self.gammas[0], list(self.gammas[1:]), self.params)
        stripped = dict(self.params)
        stripped["w_c"] = np.zeros_like(self.params["w_c"])
        logits2, _ = copy_scores(self.gammas[0], list(self.gammas[1:]), stripped)
        assert np.allclose(logits[1:] - logits[1], logits2[1:] - logits2[1],
                           atol=1e-12)


class TestSequenceNll:
    def test_loss_is_linear_in_mu(self):
        config = tiny_config(layers=2)
        params = init_params(config)
        ex = toy_example(seed=0)
        assert ex.A
        l0 = sequence_nll(ex, params, config, mu=0.0)
        l1 = sequence_nll(ex, params, config, mu=1.0)
        l2 = sequence_nll(ex, params, config, mu=2.0)
        assert l2 - l0 == pytest.approx(2.0 * (l1 - l0), abs=1e-9)
        assert l1 > l0

    def test_mu_zero_matches_stepwise_generation_loss(self):
        config = tiny_config()
        params = init_params(config)
        ex = toy_example(seed=2)
        enc = encode(ex.X, params, config)
        state = init_decoder_state(enc, config)
        prev = 0
        total = 0.0
        for y in ex.Y:
            step = decode_step(prev, state, enc, params, config)
            total += -float(np.log(step.p_gen[y]))
            state = step.state
            prev = y
        assert sequence_nll(ex, params, config, mu=0.0) == pytest.approx(total, abs=1e-9)

    def test_assignment_to_non_head_rejected(self):
        config = tiny_config()
        params = init_params(config)
        ex = TrainingExample(X=(1, 2), Y=(3, 4, 5, 1), A={2: 1},
                             heads=(True, False, False, False))
        with pytest.raises(InputError):
            sequence_nll(ex, params, config, mu=1.0)

    def test_target_out_of_range_rejected(self):
        config = tiny_config()
        params = init_params(config)
        ex = TrainingExample(X=(1,), Y=(10, 1), A={}, heads=(False, False))
        with pytest.raises(InputError):
            sequence_nll(ex, params, config, mu=0.0)

    def test_non_finite_loss_raises(self):
        config = tiny_config()
        params = init_params(config)
        params["g_b2"][0] = np.nan
        ex = toy_example(seed=1)
        with pytest.raises(NumericError):
            sequence_nll(ex, params, config, mu=0.0)


class TestGradCheck:
    def test_analytic_matches_central_differences(self):
        worst, report = grad_check(seed=0)
        assert worst < 1e-4
        assert report

    def test_zero_step_rejected(self):
        with pytest.raises(InputError):
            grad_check(seed=0, eps=0.0)

    def test_unused_embedding_rows_get_zero_gradient(self):
        config = tiny_config(layers=2)
        params = init_params(config)
        ex = toy_example(seed=0)
        _, grads = loss_and_grads(ex, params, config, mu=1.0)
        for row in set(range(config.src_vocab)) - set(ex.X):
            assert not grads["src_emb"][row].any()
        for row in set(range(config.tgt_vocab)) - set(ex.Y) - {0}:
            assert not grads["tgt_emb"][row].any()

    def test_toy_example_is_well_formed(self):
        ex = toy_example(seed=3)
        assert ex.Y[-1] == 1
        assert ex.heads[0] is True
        assert ex.A
        for t, k in ex.A.items():
            assert k < t and ex.heads[k]


def small_data(size=8, seed=0):
    return synth_dataset(seed=seed, size=size, val_size=2, test_size=2)


class TestTrainingLoop:
    def test_seed_identical_runs_are_bitwise_equal(self):
        data = small_data()
        examples = [ex.example for ex in data.train]
        val = [ex.example for ex in data.val]
        config = ModelConfig(src_vocab=data.src_vocab.size,
                             tgt_vocab=data.tgt_vocab.size, embed_dim=6,
                             hidden_dim=6, layers=1, ffnn_dim=6, mu=1.0, seed=0)
        plan = TrainingPlan(max_epochs=3, patience=3)
        p1, h1 = train(examples, val, config, plan)
        p2, h2 = train(examples, val, config, plan)
        assert h1 == h2
        assert all(np.array_equal(p1[k], p2[k]) for k in p1)

    def test_phase_zero_cap(self):
        data = small_data()
        examples = [ex.example for ex in data.train]
        val = [ex.example for ex in data.val]
        config = ModelConfig(src_vocab=data.src_vocab.size,
                             tgt_vocab=data.tgt_vocab.size, embed_dim=6,
                             hidden_dim=6, layers=1, ffnn_dim=6, mu=1.0, seed=0)
        plan = TrainingPlan(max_epochs=4, patience=4, phase0_epochs=2)
        _, hist = train(examples, val, config, plan)
        assert sum(1 for h in hist if h["phase"] == 0) == 2
        assert sum(1 for h in hist if h["phase"] == 1) == 4

    def test_patience_stops_on_plateau(self):
        # lr=0 freezes the weights, so validation loss never improves after
        # the first epoch and each phase stops after patience extra epochs.
        data = small_data()
        examples = [ex.example for ex in data.train]
        val = [ex.example for ex in data.val]
        config = ModelConfig(src_vocab=data.src_vocab.size,
                             tgt_vocab=data.tgt_vocab.size, embed_dim=6,
                             hidden_dim=6, layers=1, ffnn_dim=6, mu=1.0, seed=0)
        plan = TrainingPlan(lr=0.0, max_epochs=30, patience=2)
        _, hist = train(examples, val, config, plan)
        assert sum(1 for h in hist if h["phase"] == 0) == 3
        assert sum(1 for h in hist if h["phase"] == 1) == 3

    def test_mu_zero_skips_the_second_phase(self):
        data = small_data()
        examples = [ex.example for ex in data.train]
        val = [ex.example for ex in data.val]
        config = ModelConfig(src_vocab=data.src_vocab.size,
                             tgt_vocab=data.tgt_vocab.size, embed_dim=6,
                             hidden_dim=6, layers=1, ffnn_dim=6, mu=0.0, seed=0)
        _, hist = train(examples, val, config, TrainingPlan(max_epochs=2, patience=2))
        assert {h["phase"] for h in hist} == {0}

    def test_empty_sets_rejected(self):
        data = small_data()
        examples = [ex.example for ex in data.train]
        config = ModelConfig(src_vocab=data.src_vocab.size,
                             tgt_vocab=data.tgt_vocab.size, embed_dim=6,
                             hidden_dim=6, layers=1, ffnn_dim=6, seed=0)
        with pytest.raises(InputError):
            train([], examples, config)
        with pytest.raises(InputError):
            train(examples, [], config)
        with pytest.raises(InputError):
            mean_loss([], {}, config, 0.0)

    def test_single_pair_overfit_is_reproduced_by_decoding(self):
        data = synth_dataset(seed=5, size=1)
        ex = data.train[0].example
        config = ModelConfig(src_vocab=data.src_vocab.size,
                             tgt_vocab=data.tgt_vocab.size, embed_dim=8,
                             hidden_dim=8, layers=1, ffnn_dim=8, mu=1.0, seed=0)
        plan = TrainingPlan(lr=1e-2, batch_size=1, max_epochs=220, patience=220,
                            phase0_epochs=110)
        params, hist = train([ex], [ex], config, plan)
        assert min(h["train_loss"] for h in hist if h["phase"] == 1) < 1.0
        ids, assignments = greedy_decode(ex.X, params, config, data.tgt_vocab)
        assert ids == ex.Y[:-1]
        assert assignments == ex.A

    def test_mu_zero_copy_accuracy_stays_at_chance(self):
        data = synth_dataset(seed=1, size=48, val_size=24)
        parser = CopyParser(embed_dim=8, hidden_dim=12, ffnn_dim=8, mu=0.0,
                            seed=0, lr=5e-3, batch_size=8, max_epochs=12,
                            patience=12)
        parser.fit(data)
        assert {h["phase"] for h in parser.history_} == {0}
        acc = assignment_accuracy(list(data.val), parser.params_, parser.config_)
        assert acc < 0.5


class TestCopyParser:
    def test_unfitted_estimator_refuses(self):
        parser = CopyParser()
        with pytest.raises(NotFittedError):
            parser.predict(toy_example(seed=0))

    def test_fit_predict_generate(self):
        data = small_data(size=12, seed=2)
        parser = CopyParser(embed_dim=6, hidden_dim=6, ffnn_dim=6, seed=0,
                            max_epochs=2, patience=2)
        assert parser.fit(data) is parser
        ex = data.val[0].example
        preds = parser.predict(ex)
        assert set(preds) == set(ex.A)
        for t, k in preds.items():
            assert k is None or (k < t and ex.heads[k])
        ids, assignments = parser.generate(ex.X, max_len=30)
        assert len(ids) <= 30
        assert all(t < len(ids) for t in assignments)

    def test_params_round_trip(self):
        parser = CopyParser(hidden_dim=12, mu=2.0)
        got = parser.get_params()
        assert got["hidden_dim"] == 12 and got["mu"] == 2.0
        parser.set_params(lr=1e-4)
        assert parser.lr == 1e-4
        with pytest.raises(ValueError):
            parser.set_params(nope=1)


class TestGreedyDecode:
    def test_max_len_zero_is_empty(self):
        data = small_data()
        config = ModelConfig(src_vocab=data.src_vocab.size,
                             tgt_vocab=data.tgt_vocab.size, embed_dim=6,
                             hidden_dim=6, layers=1, ffnn_dim=6, seed=0)
        params = init_params(config)
        ids, assignments = greedy_decode(data.train[0].example.X, params,
                                         config, data.tgt_vocab, max_len=0)
        assert ids == ()
        assert assignments == {}

    def test_assignments_only_at_emitted_bullets(self):
        data = small_data()
        config = ModelConfig(src_vocab=data.src_vocab.size,
                             tgt_vocab=data.tgt_vocab.size, embed_dim=6,
                             hidden_dim=6, layers=1, ffnn_dim=6, seed=3)
        params = init_params(config)
        bullet = data.tgt_vocab.id("@b")
        for ex in data.train:
            ids, assignments = greedy_decode(ex.example.X, params, config,
                                             data.tgt_vocab, max_len=40)
            for t, k in assignments.items():
                assert ids[t] == bullet
                assert k < t
                assert data.tgt_vocab.head_flags[ids[k]]


class TestSaveLoad:
    def build(self):
        data = small_data()
        config = ModelConfig(src_vocab=data.src_vocab.size,
                             tgt_vocab=data.tgt_vocab.size, embed_dim=6,
                             hidden_dim=6, layers=1, ffnn_dim=6, mu=1.5, seed=9)
        return init_params(config), config, data

    def test_round_trip(self, tmp_path):
        params, config, data = self.build()
        path = tmp_path / "model.npz"
        save_model(path, params, config, data.src_vocab, data.tgt_vocab)
        got_params, got_config, got_src, got_tgt = load_model(path)
        assert got_config == config
        assert got_src == data.src_vocab and got_tgt == data.tgt_vocab
        assert set(got_params) == set(params)
        assert all(np.array_equal(got_params[k], params[k]) for k in params)
        ex = data.train[0].example
        assert sequence_nll(ex, got_params, got_config, 1.0) == \
            sequence_nll(ex, params, config, 1.0)

    def test_exact_path_without_suffix(self, tmp_path):
        params, config, data = self.build()
        path = tmp_path / "checkpoint"
        save_model(path, params, config, data.src_vocab, data.tgt_vocab)
        assert path.exists()
        _, got_config, _, _ = load_model(path)
        assert got_config == config

    def test_missing_file_rejected(self, tmp_path):
        with pytest.raises(InputError):
            load_model(tmp_path / "absent.npz")

    def test_garbage_file_rejected(self, tmp_path):
        path = tmp_path / "junk.npz"
        path.write_bytes(b"this is not a checkpoint")
        with pytest.raises(InputError):
            load_model(path)

    def test_npz_without_meta_rejected(self, tmp_path):
        path = tmp_path / "bare.npz"
        np.savez(path, a=np.zeros(3))
        with pytest.raises(InputError):
            load_model(path)
