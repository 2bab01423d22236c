"""
Forgetting on two tasks that disagree
=====================================

Task 1 asks the model for +signal, task 2 for -signal on the very same kind
of input. Plain fine-tuning (Naive) learns task 2 and forgets task 1; each
continual-learning method pays some plasticity to keep task 1 alive.
"""

import numpy as np

from fedcontinual import MethodParams, TrainSettings, make_strategy, run_experiment
from fedcontinual.evaluation import compute_af, compute_ap
from fedcontinual.lstm import LstmSpec
from fedcontinual.optim import OptState
from fedcontinual.scenarios import conflicting_tasks

# two clients, a base task and two continual tasks of i.i.d. windows
data = conflicting_tasks(seed=1)
print(f"{data.n_clients} clients, {data.n_tasks} tasks, "
      f"{len(data.splits[0][1][0])} train windows per client and task")

spec = LstmSpec(data.input_dim, hidden_dim=8, horizon=1, lag=4)
settings = TrainSettings(base_rounds=40, task_rounds=20, batch_size=32,
                         optimizer=OptState(lr=0.01))

# penalty strengths picked so each method clearly holds on to task 1
params = MethodParams(lambda_kd=3.0, lambda_replay=3.0, lambda_ewc=1e6, lambda_oewc=1e6,
                      lambda_si=5.0, replay_ratio=0.2, batch_size=32)

print(f"\n{'method':<8} {'AF':>8} {'AP':>8}   P (rows: after task i)")
for method in ["Naive", "Replay", "LwF", "EWC", "OEWC", "SI"]:
    result = run_experiment(data, make_strategy(method, params), spec, settings, seed=1)
    P = result.P
    print(f"{method:<8} {compute_af(P):8.3f} {compute_ap(P):8.3f}   "
          f"{np.round(P.entries, 3).tolist()}")

# AF > 0 means the final model is worse on task 1 than right after learning it.
# The regularized methods trade a worse task-2 fit (higher AP) for lower AF.
