import os
import tempfile
import unittest

import numpy as np

from mgcal.game.config import GameConfig, parse_config, load_config, save_config
from mgcal.game.streams import substream, replica_seed
from mgcal.game.strategies import (StrategyTable, generate_strategies, reduced_stats,
                                   disagreement_counts)
from mgcal.utilities import psd_factor, is_psd, parse_grid, FactorizationError, batch_means


class TestConfigValidation(unittest.TestCase):
    def runTest(self):
        """
        invalid game parameterizations, non-integral counts included, are rejected at construction
        """
        bad = [dict(kind='MG', N=0, P=4), dict(kind='MG', N=3, P=0),
               dict(kind='MG', N=3, P=4, gamma=0.0), dict(kind='MG', N=3, P=4, w=-1.0),
               dict(kind='GCMG', N=5, P=4, N_s=2, N_p=2), dict(kind='XG', N=3, P=4),
               dict(kind='MG', N=3, P=4, M=3), dict(kind='MG', N=3, P=4, seed=-1),
               dict(kind='MG', N=1.5, P=4), dict(kind='MG', N=3, P=4.5), dict(kind='MG', N=3, P='4'),
               dict(kind='GCMG', N=3, P=4, N_s=1.5, N_p=1.5), dict(kind='MG', N=3, P=4, M=2.0000001)]
        for kwargs in bad:
            with self.assertRaises(ValueError, msg=f"{kwargs} should be rejected"):
                GameConfig(**kwargs)
        with self.assertRaises(ValueError):
            GameConfig.from_memory('MG', 3, 2.5)
        integral = GameConfig(kind='MG', N=np.int64(5), P=8.0)
        self.assertTrue(type(integral.N) is int and integral.P == 8 and type(integral.P) is int,
                        f"integral values should be stored as int, got {integral.N!r}, {integral.P!r}")


class TestDerivedParameters(unittest.TestCase):
    def runTest(self):
        """
        alpha, n_s, n_p, alpha_ns and L follow from N, P, N_s, N_p
        """
        mg = GameConfig.from_memory('MG', 101, 5)
        self.assertTrue(mg.P == 32 and mg.M == 5, f"P = {mg.P} for M = 5")
        self.assertAlmostEqual(mg.alpha, 32/101, places=15)
        self.assertTrue(mg.S == 2, f"MG should have S = 2, got {mg.S}")

        g = GameConfig.gcmg(N_s=80, N_p=20, P=20)
        self.assertTrue(g.N == 100 and g.S == 1, f"GCMG with N = {g.N}, S = {g.S}")
        self.assertAlmostEqual(g.n_s, 4.0)
        self.assertAlmostEqual(g.n_p, 1.0)
        self.assertAlmostEqual(g.alpha_ns, 0.2)
        self.assertTrue(g.L == 1600, f"L = {g.L}")
        self.assertTrue(g.producer_mask.sum() == 20 and not g.producer_mask[:80].any(),
                        "producers should occupy the last N_p indices")
        with self.assertRaises(ValueError):
            mg.alpha_ns


class TestConfigFile(unittest.TestCase):
    def runTest(self):
        """
        the flat key = value format stores every field and applies the documented defaults
        """
        cfg = GameConfig.gcmg(N_s=7, N_p=3, P=4, gamma=0.5, w=0.02, epsilon=-0.01, seed=2**63 + 5)
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, 'game.cfg')
            save_config(cfg, path)
            self.assertTrue(load_config(path) == cfg, "saved configuration did not read back equal")

        parsed = parse_config('kind = MG\nN = 11\nM = 3  # memory\n')
        self.assertTrue(parsed.P == 8 and parsed.gamma == 1.0 and parsed.w == 1.0,
                        f"defaults or P = 2**M not applied: {parsed}")
        overridden = parse_config('kind = MG\nN = 11\nP = 8\n', gamma=2.0, seed=None)
        self.assertTrue(overridden.gamma == 2.0, "override was not applied")
        with self.assertRaises(ValueError):
            parse_config('kind = MG\nN = 11\nP = 8\nlambda = 3\n')
        with self.assertRaises(ValueError):
            parse_config('kind = MG\nP = 8\n')


class TestStreams(unittest.TestCase):
    def runTest(self):
        """
        named substreams are reproducible and mutually independent; replica seeds differ
        """
        a = substream(42, 'mu').random(5)
        b = substream(42, 'mu').random(5)
        c = substream(42, 'choice').random(5)
        self.assertTrue(np.array_equal(a, b), "same seed and stream should give identical draws")
        self.assertFalse(np.array_equal(a, c), "different streams should not coincide")
        seeds = {replica_seed(7, k) for k in range(50)}
        self.assertTrue(len(seeds) == 50, "replica seeds should be distinct")
        self.assertTrue(all(0 <= s < 2**64 for s in seeds), "replica seeds should be 64-bit")
        with self.assertRaises(ValueError):
            substream(1, 'nonsense')


class TestStrategyTables(unittest.TestCase):
    def runTest(self):
        """
        entries lie in {-w, +w}; xi and Theta follow from them; draws are reproducible
        """
        tiny = generate_strategies(GameConfig(kind='MG', N=1, P=1, seed=3))
        self.assertTrue(set(np.unique(tiny.entries)) <= {-1.0, 1.0}, "entries should be +-1")
        self.assertTrue(tiny.xi[0, 0] in (-1.0, 0.0, 1.0), f"xi = {tiny.xi[0, 0]}")

        g = generate_strategies(GameConfig.gcmg(N_s=2, N_p=2, P=2, w=2.0))
        self.assertTrue(g.entries.shape == (4, 1, 2), f"GCMG table has shape {g.entries.shape}")
        self.assertTrue(set(np.unique(g.entries)) <= {-2.0, 2.0}, "GCMG entries should be +-2")
        self.assertTrue(g.xi is None, "GCMG tables carry no xi")

        cfg = GameConfig(kind='MG', N=1000, P=64, seed=11)
        t1, t2 = generate_strategies(cfg), generate_strategies(cfg)
        self.assertTrue(np.array_equal(t1.entries, t2.entries), "same seed should give identical tables")
        bound = 3/np.sqrt(1000*2*64)
        self.assertTrue(abs(t1.entries.mean()) < bound, f"mean entry {t1.entries.mean()} exceeds {bound}")
        a0, a1 = t1.entries[:, 0, :], t1.entries[:, 1, :]
        self.assertTrue(np.array_equal(t1.xi == 0, a0 == a1), "xi should vanish exactly where strategies agree")
        self.assertTrue(np.allclose(t1.theta, ((a0 + a1)/2).sum(axis=0)), "Theta mismatch")
        with self.assertRaises(ValueError):
            t1.entries[0, 0, 0] = 5.0


class TestReducedStats(unittest.TestCase):
    def runTest(self):
        """
        reduced statistics on hand-built tables, identical-strategy tables and random tables
        """
        entries = np.array([[[1, -1], [-1, -1]],
                            [[1, 1], [-1, 1]]], dtype=float)
        cfg = GameConfig(kind='MG', N=2, P=2)
        table = StrategyTable.from_entries(entries)
        stats = reduced_stats(table, cfg)
        # xi_1 = (1, 0), xi_2 = (1, 0); Theta = (0, 0)
        self.assertTrue(np.allclose(stats.xiXi, [[0.5, 0.5], [0.5, 0.5]]), f"xiXi = {stats.xiXi}")
        self.assertTrue(np.allclose(stats.xiTheta, 0.0), f"xiTheta = {stats.xiTheta}")

        same = np.repeat(np.random.default_rng(0).choice([-1.0, 1.0], size=(5, 1, 3)), 2, axis=1)
        zero = reduced_stats(StrategyTable.from_entries(same), GameConfig(kind='MG', N=5, P=3))
        self.assertTrue(not zero.xiXi.any() and not zero.xiTheta.any(), "identical strategies give xi = 0")

        with self.assertRaises(ValueError):
            reduced_stats(table, GameConfig(kind='MG', N=3, P=2))

        w, P = 0.5, 32
        cfg = GameConfig(kind='MG', N=40, P=P, w=w, seed=5)
        table = generate_strategies(cfg)
        stats = reduced_stats(table, cfg)
        diag = np.diag(stats.xiXi)
        self.assertTrue(np.allclose(diag, disagreement_counts(table)*w**2/P),
                        "diagonal should be the disagreement count times w^2/P")
        self.assertTrue(((diag >= 0) & (diag <= w**2)).all(), "diagonal out of [0, w^2]")
        self.assertTrue(np.allclose(stats.xiXi, stats.xiXi.T), "xiXi should be symmetric")
        self.assertTrue(is_psd(stats.xiXi, scale=w**2), "xiXi should be positive semidefinite")


class TestDiagonalExpectation(unittest.TestCase):
    def runTest(self):
        """
        the mean diagonal of xiXi over many tables is w^2/2 within 5 standard errors;
        off-diagonal entries shrink like w^2/sqrt(P)
        """
        w, P = 1.0, 16
        means = []
        for seed in range(120):
            cfg = GameConfig(kind='MG', N=10, P=P, w=w, seed=seed)
            means.append(np.diag(reduced_stats(generate_strategies(cfg), cfg).xiXi).mean())
        means = np.array(means)
        se = means.std(ddof=1)/np.sqrt(len(means))
        self.assertTrue(abs(means.mean() - w**2/2) < 5*se, f"mean diagonal {means.mean()} vs {w**2/2} (se {se})")

        cfg = GameConfig(kind='MG', N=200, P=400, seed=1)
        xx = reduced_stats(generate_strategies(cfg), cfg).xiXi
        off = xx[~np.eye(200, dtype=bool)]
        rms = np.sqrt((off**2).mean())
        self.assertTrue(rms < 2*w**2/np.sqrt(400), f"off-diagonal rms {rms} too large")


class TestPsdFactor(unittest.TestCase):
    def runTest(self):
        """
        the factor reconstructs PSD tables (full rank and rank deficient) and rejects indefinite ones
        """
        rng = np.random.default_rng(0)
        X = rng.standard_normal((6, 3))
        low_rank = X @ X.T
        for cov in (np.eye(4)*2.5, low_rank, np.zeros((3, 3))):
            A = psd_factor(cov)
            scale = max(np.mean(np.diag(cov)), 1.0)
            err = np.abs(A @ A.T - cov).max()
            self.assertTrue(err <= 1e-8*scale, f"reconstruction error {err}")
        with self.assertRaises(FactorizationError):
            psd_factor(np.array([[1.0, 0.0], [0.0, -1.0]]))


class TestHelpers(unittest.TestCase):
    def runTest(self):
        """
        grid specifications and batch means
        """
        grid = parse_grid('0.05:8:16')
        self.assertTrue(len(grid) == 16 and np.isclose(grid[0], 0.05) and np.isclose(grid[-1], 8.0),
                        f"grid = {grid}")
        self.assertTrue(parse_grid('3, 1,2') == [1.0, 2.0, 3.0], "explicit grids should be sorted")
        for spec in ('8:0.05:16', '0:1:3', '1:2'):
            with self.assertRaises(ValueError, msg=spec):
                parse_grid(spec)

        mean, se = batch_means(np.ones(100), 10)
        self.assertTrue(mean == 1.0 and se == 0.0, f"constant series gave {mean}, {se}")
        with self.assertRaises(ValueError):
            batch_means(np.ones(5), 10)


if __name__ == '__main__':
    unittest.main()
