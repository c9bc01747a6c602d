import math
import unittest

import numpy as np

from mgcal.game.config import GameConfig
from mgcal.game.streams import game_streams
from mgcal.game.strategies import generate_strategies
from mgcal.simulator.estimators import estimate_sigma, log_return_variance, return_variance
from mgcal.simulator.game_simulator import simulate
from mgcal.simulator.implementations.GCMG_engine import (GcmgState, activation_probability, gcmg_step,
                                                         run_gcmg, producers_only_sigma)


class TestProducersOnly(unittest.TestCase):
    def runTest(self):
        """
        with no speculators the attendance is the quenched sum of producer bids at mu
        """
        config = GameConfig.gcmg(N_s=0, N_p=6, P=3, w=2.0, seed=5)
        out = simulate(config, 200)
        table = out['table']
        expected = table.entries[:, 0, out['mu']].sum(axis=0)
        self.assertTrue(np.array_equal(out['attendance'], expected), "attendance should be sum_i a_i^mu")
        self.assertTrue(np.all(out['activity'] == 6), "producers always trade")

        B_mu = table.entries[:, 0, :].sum(axis=0)
        closed = (B_mu**2).mean()/config.w**2
        self.assertAlmostEqual(producers_only_sigma(table, config), closed, places=12)


class TestSymmetricActivation(unittest.TestCase):
    def runTest(self):
        """
        a single speculator with U = 0 activates half of the time (10^4 draws, 5 standard errors)
        """
        config = GameConfig.gcmg(N_s=1, N_p=0, P=2, seed=12)
        table = generate_strategies(config)
        streams = game_streams(config.seed)
        start = GcmgState.initial(config)
        active = 0
        n = 10000
        for _ in range(n):
            _, B, _ = gcmg_step(start, table, config, streams)
            active += B != 0.0
        freq = active/n
        self.assertTrue(abs(freq - 0.5) < 5*0.5/math.sqrt(n), f"activation frequency {freq}")


class TestActivationConventions(unittest.TestCase):
    def runTest(self):
        """
        the literal convention is the mirror image of the default one
        """
        U = np.array([-2.0, 0.0, 0.7, 40.0])
        prose = activation_probability(U, 1.5)
        literal = activation_probability(U, 1.5, 'literal')
        self.assertTrue(np.allclose(prose + literal, 1.0), "conventions should sum to one")
        self.assertTrue(np.all(np.diff(prose) > 0), "default activation increases with U")
        with self.assertRaises(ValueError):
            activation_probability(U, 1.0, 'other')


class TestHandReplay(unittest.TestCase):
    def runTest(self):
        """
        N=4 (2 speculators, 2 producers), P=2: five steps equal a hand replay on the same draws
        """
        config = GameConfig.gcmg(N_s=2, N_p=2, P=2, epsilon=0.3, seed=31)
        table = generate_strategies(config)
        streams = game_streams(config.seed)
        a = table.entries[:, 0, :]
        U = [0.0, 0.0]
        expected = []
        for _ in range(5):
            mu = min(int(streams['mu'].random()*config.P), config.P - 1)
            u = streams['choice'].random(2)
            phi = [1.0 if u[i] < 1/(1 + math.exp(-U[i])) else 0.0 for i in range(2)] + [1.0, 1.0]
            B = sum(phi[i]*a[i, mu] for i in range(4))
            for i in range(2):
                U[i] -= a[i, mu]*B/config.P + config.epsilon/config.P
            expected.append(B)
        out = run_gcmg(config, table, 5)
        self.assertTrue(np.allclose(out['attendance'], expected, atol=1e-12),
                        f"engine {out['attendance']} vs hand replay {expected}")
        self.assertTrue(np.allclose(out['state'].scores[:2], U, atol=1e-12), "speculator scores differ")
        self.assertTrue(np.all(out['state'].scores[2:] == 0.0), "producers carry no score")


class TestStepMatchesBlock(unittest.TestCase):
    def runTest(self):
        """
        gcmg_step and the block runner consume the streams identically
        """
        config = GameConfig.gcmg(N_s=5, N_p=3, P=4, epsilon=0.05, seed=17)
        table = generate_strategies(config)
        streams = game_streams(config.seed)
        state = GcmgState.initial(config)
        Bs = []
        for _ in range(300):
            state, B, _ = gcmg_step(state, table, config, streams)
            Bs.append(B)
        block = run_gcmg(config, table, 300)
        self.assertTrue(np.array_equal(block['attendance'], np.array(Bs)), "attendance differs")
        self.assertTrue(np.array_equal(block['activity'], state.activity_history), "activity differs")
        self.assertTrue(np.array_equal(block['state'].scores, state.scores), "final scores differ")


class TestBounds(unittest.TestCase):
    def runTest(self):
        """
        |B| <= N w and at least N_p agents trade at every step
        """
        config = GameConfig.gcmg(N_s=30, N_p=10, P=10, w=0.1, epsilon=-0.01, seed=2)
        out = simulate(config, 4000)
        self.assertTrue(np.all(np.abs(out['attendance']) <= config.N*config.w + 1e-12), "attendance out of range")
        self.assertTrue(np.all(out['activity'] >= config.N_p), "producers missing from the market")


class TestLargeThresholdDecay(unittest.TestCase):
    def runTest(self):
        """
        with a large positive threshold speculator activity decays toward zero
        """
        config = GameConfig.gcmg(N_s=50, N_p=50, P=10, epsilon=10.0, seed=6)
        out = simulate(config, 400, record_speculators=True)
        windows = out['speculator_activity'].reshape(10, -1).mean(axis=1)
        self.assertTrue(windows[0] > windows[-1], f"windowed activity {windows} does not decay")
        self.assertTrue(windows[-1] < 0.05, f"late activity {windows[-1]} should be near zero")
        self.assertTrue(np.all(np.diff(windows[:4]) <= 0.05), f"early windows {windows[:4]} should not rise")


class TestFewSpeculatorsLimit(unittest.TestCase):
    def runTest(self):
        """
        with very few speculators sigma^2_N approaches the producers-only closed form
        """
        config = GameConfig.gcmg(N_s=1, N_p=400, P=400, seed=10)
        table = generate_strategies(config)
        est = estimate_sigma(config, table, burn_in=2000, measure=40000)
        closed = producers_only_sigma(table, config)
        self.assertTrue(abs(est.sigma2_N - closed) < 0.1*closed, f"sigma2_N {est.sigma2_N} vs closed form {closed}")


class TestInitialScores(unittest.TestCase):
    def runTest(self):
        """
        strongly negative initial scores keep the speculators out of the market at the start;
        a score vector must have one entry per speculator
        """
        config = GameConfig.gcmg(N_s=6, N_p=4, P=8, epsilon=0.01, seed=13)
        out = simulate(config, 20, init_scores=-50.0)
        self.assertTrue(np.all(out['activity'] == config.N_p), f"activity {out['activity']}")
        per_agent = GcmgState.initial(config, np.arange(6.0))
        self.assertTrue(np.array_equal(per_agent.scores, np.r_[np.arange(6.0), np.zeros(4)]), "speculator scores")
        with self.assertRaises(ValueError):
            GcmgState.initial(config, np.zeros(10))


class TestReturnVariance(unittest.TestCase):
    def runTest(self):
        """
        the variance of per-step log returns equals the centred sigma^2_N/(w^2 N^2) within
        3 combined standard errors (w = 1)
        """
        config = GameConfig.gcmg(N_s=40, N_p=20, P=20, epsilon=0.01, seed=8)
        burn_in, measure = 200*config.P, 1000*config.P
        out = simulate(config, burn_in + measure)
        B = out['attendance'][burn_in:]
        est = estimate_sigma(config, out['table'], burn_in=burn_in, measure=measure)
        # producers give the attendance a nonzero time average
        drift = (B.mean()/(config.N*config.w))**2
        target = return_variance(est.sigma2_N, config.N, config.w) - drift
        var, var_se = log_return_variance(B, config)
        se = math.sqrt(var_se**2 + (est.stderr/config.N**2)**2)
        self.assertTrue(abs(var - target) < 3*se, f"return variance {var} vs {target} (se {se})")


if __name__ == '__main__':
    unittest.main()
