"""Full-batch gradient descent on noisy copies behaves like ridge regression.

Under the sum-of-squares criterion, augmentation with K copies scales the
step by K+1 and adds a ridge penalty K tau^2 / (K+1).  Under the mean
criterion the step size is unchanged and the penalty is divided by n.
"""
import numpy as np

from noisycopies import oracle, trainers
from noisycopies.data import AugmentationSpec, SyntheticSpec, gen_synthetic

d = gen_synthetic(SyntheticSpec(n=20, m=15, sigma_x=0.5, sigma=0.2, seed=0))
w = np.full(d.m, 0.1)

# the expected augmented gradient agrees with the ridge gradient within a few SE
for rule in ("sse", "mse"):
    aug = AugmentationSpec(K=4, tau=1.0, mode="online", seed=1)
    cert = oracle.certify_expected_update(d, w, aug, rule, n_draws=5000)
    print(cert.line())

# the training curves follow the same story
for crit, eta in (("SSE", 0.001), ("MSE", 0.001 * d.n)):
    aug = AugmentationSpec(K=4, tau=1.0, mode="online", seed=2)
    da = trainers.TrainerConfig("da-online", crit, eta, 1000, aug=aug)
    ridge = trainers.ridge_equivalent(da, d.n)
    gap = oracle.compare_curves(trainers.train(d, da).curve, trainers.train(d, ridge).curve)
    print(f"{crit}: ridge eta={ridge.eta:g} lambda={ridge.lam:.4g}  tail gap {gap.tail_gap:.2e}")

# with tau = 0 the copies are exact duplicates: SSE speeds up K+1 times, MSE does not
aug0 = AugmentationSpec(K=4, tau=0.0, mode="online", seed=0)
sse = trainers.train(d, trainers.TrainerConfig("da-online", "SSE", 0.001, 1, aug=aug0)).curve
fast = trainers.train(d, trainers.TrainerConfig("naive", "SSE", 0.005, 1)).curve
print("duplicated SSE == naive at 5x step:", np.array_equal(sse, fast))
