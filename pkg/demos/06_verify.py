"""Monte Carlo certificates for the expected-update identities.

Each certificate compares a sample mean against its closed form and reports
the largest per-coordinate z-score; anything above 5 is a failure.  The
same report is produced by ``noisycopies verify``.
"""
from noisycopies import oracle
from noisycopies.experiments import run_verify

certs = run_verify("quick")
print(oracle.report_lines(certs), end="")
print("all passed:", all(c.passed for c in certs))
