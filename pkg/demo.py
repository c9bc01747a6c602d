import numpy as np
from mgcal import GameSimulator, Calibrator
from mgcal.calibration.market_data import synthetic_chain, synthetic_vol_index
from mgcal.calibration.calibrator import calibrate_w, model_iv
from mgcal.simulator.sweeps import mg_grid

# phase curve of the MG at N = 51
configs = mg_grid(np.geomspace(0.05, 8, 12), N=51, seed=0)

simulator = GameSimulator(
                    burn_in = None, # 200 P steps before measuring
                    measure = None, # 1000 P measured steps
                    n_batches = 10, # batch means for the standard error
                    n_jobs = 4, # worker processes for the sweep
                )

curve = simulator.run_sweep(configs, seeds=2)
print(curve.critical)

# a market whose vols are the game's at alpha = 1, seen through an index bottoming at 10.98%
series = synthetic_vol_index()
w_bar = calibrate_w(series, curve)
chain = synthetic_chain(lambda q: model_iv(1.0, curve, w_bar, curve.critical.N), noise=0.005)

calibrator = Calibrator(
                    mode = 'flat', # or 'maturity' with a time_scale
                    print_status = True,
                )

res = calibrator.run_calibration(chain, series, curve)
print(res.w_bar, res.fitted_control, res.critical_gap)
