"""Frequent itemset mining over uncertain transaction databases.

Expected-support miners (UApriori, UFP-growth, UH-Mine), exact probabilistic
miners (dynamic programming and divide-and-conquer, with or without Chernoff
pruning), Poisson/Normal approximate miners, a brute-force oracle, a
synthetic data generator and a benchmarking harness.
"""
from .apriori import uapriori
from .approx import (LambdaThreshold, lambda_threshold, nduh_mine, ndu_apriori,
                     normal_freq_prob, pdu_apriori, poisson_freq_prob)
from .exact import (chernoff_prune, dcb, dcnb, dpb, dpnb, freq_prob_dc, freq_prob_dp,
                    mine_probabilistic, support_pmf_dc)
from .report import ItemsetResult, MiningReport
from .udb import (FormatError, MiningParams, ParameterError, UncertainDatabase,
                  UncertainTransaction, assign_gaussian, assign_zipf, parse_fimi, parse_udb,
                  read_any, serialize_udb)
from .ufp import ufp_growth
from .uhmine import uh_mine

__version__ = "0.1.0"

__all__ = [
    "FormatError", "ItemsetResult", "LambdaThreshold", "MiningParams", "MiningReport",
    "ParameterError", "UncertainDatabase", "UncertainTransaction", "assign_gaussian",
    "assign_zipf", "chernoff_prune", "dcb", "dcnb", "dpb", "dpnb", "freq_prob_dc",
    "freq_prob_dp", "lambda_threshold", "mine_probabilistic", "nduh_mine", "ndu_apriori",
    "normal_freq_prob", "parse_fimi", "parse_udb", "pdu_apriori", "poisson_freq_prob",
    "read_any", "serialize_udb", "support_pmf_dc", "uapriori", "ufp_growth", "uh_mine",
]
