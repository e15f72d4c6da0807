import numpy as np
import pytest

from conftest import finite_diff_grad, random_graph, rel_err
from lyinggcn.data import generate_multipartite
from lyinggcn.errors import ConfigurationError, DimensionError
from lyinggcn.graph import Graph, normalize_adjacency
from lyinggcn.layers import (
    DenseLayerParams,
    GCNIIParams,
    GraphContext,
    LyingLayerParams,
    ModelConfig,
    ModelParams,
    assemble_model,
    forward,
    gcn_layer,
    gcnii_layer,
    lying_gcn_layer,
    lying_gcnii_layer,
    lying_message,
    lying_weights,
)
from lyinggcn.dynamics import build_lying_E
from lyinggcn.numerics import tensor as T
from lyinggcn.numerics.tensor import Tensor


def _ctx(g):
    return GraphContext.from_graph(g)


class TestGCNLayer:
    def test_single_node_identity(self):
        ctx = _ctx(Graph(1, []))
        H = Tensor([[3.5]])
        out = gcn_layer(H, ctx.ops, Tensor([[1.0]]), "identity")
        np.testing.assert_allclose(out.values, [[3.5]])

    def test_k2_cancellation(self):
        ctx = _ctx(Graph(2, [(0, 1)]))
        out = gcn_layer(Tensor([[1.0], [-1.0]]), ctx.ops, Tensor([[1.0]]), "identity")
        np.testing.assert_allclose(out.values, [[0.0], [0.0]], atol=1e-15)

    def test_matrix_form_matches_nodewise(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            g = random_graph(rng, 2, 12)
            ops = normalize_adjacency(g)
            d, dp = int(rng.integers(1, 4)), int(rng.integers(1, 4))
            H = rng.standard_normal((g.n_nodes, d))
            W = rng.standard_normal((d, dp))
            out = gcn_layer(Tensor(H), ops, Tensor(W), "tanh").values

            S = ops.S.to_dense()
            nbrs = g.neighbor_sets()
            for u in range(g.n_nodes):
                agg = S[u, u] * H[u] + sum(S[u, v] * H[v] for v in nbrs[u])
                np.testing.assert_allclose(out[u], np.tanh(agg @ W), atol=1e-12)


class TestLyingWeights:
    def test_zero_map_gives_zero_weights(self, chain3):
        ctx = _ctx(chain3)
        H = Tensor(np.random.default_rng(1).standard_normal((3, 2)))
        z = lying_weights(H, ctx.edges, Tensor(np.zeros((4, 2))))
        np.testing.assert_array_equal(z.values, np.zeros((4, 2)))

    def test_direction_asymmetry(self, chain3):
        ctx = _ctx(chain3)
        rng = np.random.default_rng(2)
        H = Tensor(rng.standard_normal((3, 2)))
        z = lying_weights(H, ctx.edges, Tensor(rng.standard_normal((4, 2)))).values
        # locate the two directions of edge (0, 1)
        fwd = np.nonzero((ctx.edges.src == 0) & (ctx.edges.dst == 1))[0][0]
        rev = np.nonzero((ctx.edges.src == 1) & (ctx.edges.dst == 0))[0][0]
        assert not np.allclose(z[fwd], z[rev])

    def test_scalar_saturation(self):
        ctx = _ctx(Graph(2, [(0, 1)]))
        H = Tensor([[10.0], [0.3]])
        z = lying_weights(H, ctx.edges, Tensor([[1.0], [0.0]])).values
        e = np.nonzero(ctx.edges.src == 0)[0][0]
        assert abs(z[e, 0] - np.tanh(10.0)) < 1e-12

    def test_strictly_inside_unit_interval(self):
        rng = np.random.default_rng(3)
        g = random_graph(rng, 3, 10)
        ctx = _ctx(g)
        H = Tensor(rng.standard_normal((g.n_nodes, 3)))
        z = lying_weights(H, ctx.edges, Tensor(rng.standard_normal((6, 3)))).values
        assert np.all(np.abs(z) < 1.0)

    def test_arity_mismatch(self, chain3):
        ctx = _ctx(chain3)
        with pytest.raises(DimensionError):
            lying_weights(Tensor(np.zeros((3, 2))), ctx.edges, Tensor(np.zeros((3, 2))))

    def test_matches_explicit_concatenation(self, chain3):
        rng = np.random.default_rng(4)
        ctx = _ctx(chain3)
        H = Tensor(rng.standard_normal((3, 2)))
        V = Tensor(rng.standard_normal((4, 2)))
        z = lying_weights(H, ctx.edges, V).values
        pair = np.hstack([H.values[ctx.edges.src], H.values[ctx.edges.dst]])
        np.testing.assert_allclose(z, np.tanh(pair @ V.values), atol=1e-14)


class TestLyingMessage:
    def test_unit_weights_recover_sender(self, chain3):
        ctx = _ctx(chain3)
        rng = np.random.default_rng(5)
        H = Tensor(rng.standard_normal((3, 2)))
        m = lying_message(H, ctx.edges, Tensor(np.ones((4, 2)))).values
        np.testing.assert_array_equal(m, H.values[ctx.edges.src])

    def test_sign_flip_channel(self, chain3):
        ctx = _ctx(chain3)
        H = Tensor(np.random.default_rng(6).standard_normal((3, 2)))
        z = np.ones((4, 2))
        z[:, 1] = -1.0
        m = lying_message(H, ctx.edges, Tensor(z)).values
        np.testing.assert_allclose(m[:, 1], -H.values[ctx.edges.src, 1])

    def test_hand_case(self):
        ctx = _ctx(Graph(2, [(0, 1)]))
        H = Tensor([[2.0, -1.0], [0.0, 0.0]])
        z = np.zeros((2, 2))
        e = np.nonzero(ctx.edges.src == 0)[0][0]
        z[e] = [0.5, -1.0]
        m = lying_message(H, ctx.edges, Tensor(z)).values
        np.testing.assert_allclose(m[e], [1.0, 1.0])


class TestLyingGCNLayer:
    def test_clamped_equals_gcn(self):
        rng = np.random.default_rng(7)
        for _ in range(5):
            g = random_graph(rng, 2, 10)
            ctx = _ctx(g)
            d = 3
            H = Tensor(rng.standard_normal((g.n_nodes, d)))
            params = LyingLayerParams(
                V=Tensor(rng.standard_normal((2 * d, d))),
                W=Tensor(rng.standard_normal((d, 2))),
                activation="tanh",
            )
            clamped = lying_gcn_layer(H, ctx.ops, ctx.edges, params, clamp_unit_z=True)
            plain = gcn_layer(H, ctx.ops, params.W, "tanh")
            np.testing.assert_allclose(clamped.values, plain.values, atol=1e-12)

    def test_zero_map_keeps_only_self_term(self, chain3):
        rng = np.random.default_rng(8)
        ctx = _ctx(chain3)
        H = Tensor(rng.standard_normal((3, 2)))
        params = LyingLayerParams(
            V=Tensor(np.zeros((4, 2))), W=Tensor(rng.standard_normal((2, 2))), activation="identity"
        )
        out = lying_gcn_layer(H, ctx.ops, ctx.edges, params)
        expect = (ctx.ops.s_diag[:, None] * H.values) @ params.W.values
        np.testing.assert_allclose(out.values, expect, atol=1e-14)

    def test_matrix_identity_with_learned_weights(self):
        # d=1, identity activation, W=1: output must equal (I - L~ (Z+I)) h
        rng = np.random.default_rng(9)
        for _ in range(20):
            g = random_graph(rng, 2, 10)
            ctx = _ctx(g)
            H = Tensor(rng.standard_normal((g.n_nodes, 1)))
            V = Tensor(rng.standard_normal((2, 1)))
            params = LyingLayerParams(V=V, W=Tensor([[1.0]]), activation="identity")
            out = lying_gcn_layer(H, ctx.ops, ctx.edges, params).values

            z = lying_weights(H, ctx.edges, V).values
            Z = np.zeros((g.n_nodes, g.n_nodes))
            Z[ctx.edges.dst, ctx.edges.src] = z[:, 0]
            E = build_lying_E(ctx.ops, Z)
            expect = (np.eye(g.n_nodes) - E) @ H.values
            np.testing.assert_allclose(out, expect, atol=1e-12)


class TestGCNIILayer:
    def test_beta_schedule(self):
        p1 = GCNIIParams(W=Tensor([[0.0]]), alpha=0.1, lam=1.0, layer_index=1)
        p10 = GCNIIParams(W=Tensor([[0.0]]), alpha=0.1, lam=1.0, layer_index=10)
        assert abs(p1.beta - np.log(2.0)) < 1e-12
        assert abs(p10.beta - np.log(1.1)) < 1e-12

    def test_alpha_zero_w_zero(self, chain3):
        rng = np.random.default_rng(10)
        ctx = _ctx(chain3)
        H = Tensor(rng.standard_normal((3, 2)))
        H0 = Tensor(rng.standard_normal((3, 2)))
        p = GCNIIParams(W=Tensor(np.zeros((2, 2))), alpha=1e-12, lam=1.0, layer_index=1)
        out = gcnii_layer(H, H0, ctx.ops, p, "identity").values
        S = ctx.ops.S.to_dense()
        np.testing.assert_allclose(out, (1 - p.beta) * (S @ H.values), atol=1e-9)

    def test_alpha_one_ignores_h(self, chain3):
        rng = np.random.default_rng(11)
        ctx = _ctx(chain3)
        H0 = Tensor(rng.standard_normal((3, 2)))
        W = Tensor(rng.standard_normal((2, 2)))
        p = GCNIIParams(W=W, alpha=1.0 - 1e-15, lam=1.0, layer_index=2)
        outs = []
        for _ in range(2):
            H = Tensor(rng.standard_normal((3, 2)))
            outs.append(gcnii_layer(H, H0, ctx.ops, p, "tanh").values)
        np.testing.assert_allclose(outs[0], outs[1], atol=1e-12)


class TestLyingGCNIILayer:
    def test_clamped_equals_gcnii(self):
        rng = np.random.default_rng(12)
        for _ in range(5):
            g = random_graph(rng, 2, 8)
            ctx = _ctx(g)
            d = 3
            H = Tensor(rng.standard_normal((g.n_nodes, d)))
            H0 = Tensor(rng.standard_normal((g.n_nodes, d)))
            g2 = GCNIIParams(W=Tensor(rng.standard_normal((d, d))), alpha=0.1, lam=1.0, layer_index=2)
            lying = LyingLayerParams(V=Tensor(rng.standard_normal((2 * d, d))), W=None, activation="relu")
            a = lying_gcnii_layer(H, H0, ctx.ops, ctx.edges, lying, g2, clamp_unit_z=True)
            b = gcnii_layer(H, H0, ctx.ops, g2, "relu")
            np.testing.assert_allclose(a.values, b.values, atol=1e-12)

    def test_zero_map_alpha_zero(self, chain3):
        rng = np.random.default_rng(13)
        ctx = _ctx(chain3)
        H = Tensor(rng.standard_normal((3, 2)))
        H0 = Tensor(np.zeros((3, 2)))
        W = rng.standard_normal((2, 2))
        g2 = GCNIIParams(W=Tensor(W), alpha=1e-12, lam=1.0, layer_index=1)
        lying = LyingLayerParams(V=Tensor(np.zeros((4, 2))), W=None, activation="identity")
        out = lying_gcnii_layer(H, H0, ctx.ops, ctx.edges, lying, g2).values
        mix = ctx.ops.s_diag[:, None] * H.values
        expect = mix @ ((1 - g2.beta) * np.eye(2) + g2.beta * W)
        np.testing.assert_allclose(out, expect, atol=1e-9)

    def test_gradient_through_composite(self, chain3):
        rng = np.random.default_rng(14)
        ctx = _ctx(chain3)
        H = Tensor(rng.standard_normal((3, 2)))
        H0 = Tensor(rng.standard_normal((3, 2)))
        V = Tensor(rng.standard_normal((4, 2)), requires_grad=True)
        W = Tensor(rng.standard_normal((2, 2)), requires_grad=True)
        g2 = GCNIIParams(W=W, alpha=0.2, lam=1.0, layer_index=1)
        lying = LyingLayerParams(V=V, W=None, activation="tanh")

        def loss():
            out = lying_gcnii_layer(H, H0, ctx.ops, ctx.edges, lying, g2)
            return T.tensor_sum(T.elementwise_mul(out, out))

        L = loss()
        V.zero_grad()
        W.zero_grad()
        T.backward(L)
        for p in (V, W):
            fd = finite_diff_grad(lambda: loss().item(), p.values)
            assert rel_err(fd, p.grad) <= 1e-4


class TestAssembleModel:
    def test_gcn_parameter_count(self):
        cfg = ModelConfig(kind="gcn", depth=2, hidden=16)
        model = assemble_model(cfg, 1433, 7, np.random.default_rng(0))
        assert model.n_parameters() == 1433 * 16 + 2 * 16 * 16 + 16 * 7 == 23552

    def test_seed_determinism(self):
        cfg = ModelConfig(kind="lying_gcnii", depth=3, hidden=8)
        a = assemble_model(cfg, 10, 3, np.random.default_rng(42))
        b = assemble_model(cfg, 10, 3, np.random.default_rng(42))
        for p, q in zip(a.parameters(), b.parameters(), strict=True):
            np.testing.assert_array_equal(p.values, q.values)

    def test_lying_adds_pair_map_parameters(self):
        d = 16
        gcn = assemble_model(ModelConfig(kind="gcn", depth=2, hidden=d), 100, 4, np.random.default_rng(0))
        lying = assemble_model(ModelConfig(kind="lying_gcn", depth=2, hidden=d), 100, 4, np.random.default_rng(0))
        assert lying.n_parameters() - gcn.n_parameters() == 2 * (2 * d * d)

    def test_depth_zero_forbidden(self):
        with pytest.raises(ConfigurationError):
            ModelConfig(kind="gcn", depth=0, hidden=8)

    def test_invalid_kind(self):
        with pytest.raises(ConfigurationError):
            ModelConfig(kind="gat", depth=1, hidden=8)


class TestForward:
    def test_eval_deterministic(self, small_ds, small_ctx):
        cfg = ModelConfig(kind="lying_gcn", depth=2, hidden=6, activation="tanh")
        model = assemble_model(cfg, small_ds.n_features, small_ds.n_classes, np.random.default_rng(1))
        X = Tensor(small_ds.X)
        a, _ = forward(model, X, small_ctx, training=False)
        b, _ = forward(model, X, small_ctx, training=False)
        np.testing.assert_array_equal(a.values, b.values)

    def test_mlp_ignores_edges(self, small_ds):
        cfg = ModelConfig(kind="mlp", depth=2, hidden=6)
        model = assemble_model(cfg, small_ds.n_features, small_ds.n_classes, np.random.default_rng(2))
        X = Tensor(small_ds.X)
        ctx_a = GraphContext.from_graph(small_ds.graph)
        ctx_b = GraphContext.from_graph(Graph(small_ds.n_nodes, [(0, 9), (1, 8)]))
        a, _ = forward(model, X, ctx_a, training=False)
        b, _ = forward(model, X, ctx_b, training=False)
        np.testing.assert_array_equal(a.values, b.values)

    def test_width_mismatch(self, small_ds, small_ctx):
        cfg = ModelConfig(kind="gcn", depth=1, hidden=4)
        model = assemble_model(cfg, small_ds.n_features + 1, small_ds.n_classes, np.random.default_rng(3))
        with pytest.raises(DimensionError):
            forward(model, Tensor(small_ds.X), small_ctx)

    @pytest.mark.parametrize("kind", ["gcn", "gcnii", "lying_gcn", "lying_gcnii"])
    def test_permutation_equivariance(self, kind):
        rng = np.random.default_rng(15)
        ds = generate_multipartite(2, 12, 3, 5, np.random.default_rng(20))
        perm = rng.permutation(12)
        cfg = ModelConfig(kind=kind, depth=2, hidden=6, activation="tanh")
        model = assemble_model(cfg, 5, 2, np.random.default_rng(4))

        ctx = GraphContext.from_graph(ds.graph)
        base, _ = forward(model, Tensor(ds.X), ctx, training=False)

        remapped_edges = perm[ds.graph.edges]
        g2 = Graph.from_raw_edges(12, remapped_edges, warn_duplicates=False)
        ctx2 = GraphContext.from_graph(g2)
        X2 = np.empty_like(ds.X)
        X2[perm] = ds.X
        out2, _ = forward(model, Tensor(X2), ctx2, training=False)
        np.testing.assert_allclose(out2.values[perm], base.values, atol=1e-10)

    def test_embeddings_collected_per_layer(self, small_ds, small_ctx):
        cfg = ModelConfig(kind="gcn", depth=3, hidden=6)
        model = assemble_model(cfg, small_ds.n_features, small_ds.n_classes, np.random.default_rng(5))
        _, embs = forward(model, Tensor(small_ds.X), small_ctx, collect_embeddings=True)
        assert len(embs) == 4  # input map + one per layer
        assert all(e.shape == (10, 6) for e in embs)


class TestReductionIdentity:
    """Clamping all edge weights to one must reproduce the plain models exactly."""

    def _shared_models(self, kind_pair, g, rng, d=4, depth=2):
        lying_kind, plain_kind = kind_pair
        cfg_l = ModelConfig(kind=lying_kind, depth=depth, hidden=d, activation="tanh")
        lying = assemble_model(cfg_l, 5, 3, rng)
        cfg_p = ModelConfig(kind=plain_kind, depth=depth, hidden=d, activation="tanh")
        if plain_kind == "gcn":
            layers = [DenseLayerParams(W=layer.W, activation="tanh") for layer in lying.layers]
        else:
            layers = [g2 for (_, g2) in lying.layers]
        plain = ModelParams(cfg_p, 5, 3, lying.W_in, layers, lying.W_out)
        return lying, plain

    @pytest.mark.parametrize("pair", [("lying_gcn", "gcn"), ("lying_gcnii", "gcnii")])
    def test_clamped_forward_identical(self, pair):
        rng = np.random.default_rng(16)
        for _ in range(20):
            g = random_graph(rng, 2, 10)
            ctx = GraphContext.from_graph(g)
            lying, plain = self._shared_models(pair, g, rng)
            X = Tensor(rng.standard_normal((g.n_nodes, 5)))
            a, _ = forward(lying, X, ctx, training=False, clamp_unit_z=True)
            b, _ = forward(plain, X, ctx, training=False)
            np.testing.assert_allclose(a.values, b.values, atol=1e-12, rtol=0)
