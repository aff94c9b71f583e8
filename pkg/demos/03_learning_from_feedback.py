#!/usr/bin/env python3
"""Walkthrough: online learning from bandit feedback on a chunking task.

The learner never sees a gold labeling.  Each round it samples a labeling
for a random training sentence, a feedback oracle scores it with a scalar
Hamming loss, and the weights move against the stochastic gradient.  Every
few hundred iterations the current model is checkpointed and scored on a
development set; at the end the best checkpoint is selected (online-to-batch
conversion) and evaluated on held-out test data.
"""

import numpy as np

import banditchain as bc


def main():
    rng = np.random.default_rng(42)
    train_data = bc.generate_chunk_instances(200, rng)
    dev_data = bc.generate_chunk_instances(50, rng)
    test_data = bc.generate_chunk_instances(50, rng)
    model = bc.ChainModel(bc.chunk_alphabet())
    oracle = bc.FeedbackOracle("hamming")

    baseline = bc.evaluate(model, bc.SparseVector(), dev_data, oracle.loss)
    print(f"dev Hamming loss of the untrained model: {baseline:.3f}\n")

    config = bc.TrainerConfig(
        objective="el",
        gamma=0.1,
        iterations=5000,
        seed=0,
        eval_every=500,
    )
    trajectory = bc.train(config, model, train_data, dev_data, oracle)

    print("dev-loss curve (iteration -> mean Hamming loss under MAP):")
    for t, loss in trajectory.dev_curve():
        bar = "#" * int(round(40 * loss))
        print(f"  t={t:5d}  {loss:.3f}  {bar}")

    best_t, best_w = bc.select_best(trajectory)
    test_loss = bc.evaluate(model, best_w, test_data, oracle.loss)
    print(f"\nselected checkpoint t={best_t} "
          f"(dev loss {min(trajectory.dev_losses):.3f}); test loss {test_loss:.3f}")
    print(f"active features in the selected model: {len(best_w)}")

    print("\nsampled loss along the run (mean per 1000-iteration window):")
    losses = trajectory.sampled_losses[1:]
    for i in range(0, len(losses), 1000):
        window = losses[i : i + 1000]
        print(f"  t in [{i + 1:5d}, {i + len(window):5d}]  mean sampled loss {window.mean():.3f}")


if __name__ == "__main__":
    main()
