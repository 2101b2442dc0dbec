import io

import numpy as np
import pandas as pd
import pytest

from tradechains.ingest import TradeTable, parse_regional_trade
from tradechains.specialization import SpecializationTable

FOUR_REGION_CSV = """\
geography,product,value_imp,value_exp,year
North,apples,10,5,2017
North,apples,2,7,2018
North,bolts,0,3,2017
South,apples,4,0,2017
South,bolts,8,6,2018
East,apples,1,9,2017
East,cloth,5,0,2018
West,bolts,3,2,2017
West,cloth,0,4,2018
"""


@pytest.fixture
def four_region_csv() -> str:
    return FOUR_REGION_CSV


@pytest.fixture
def four_region_table() -> TradeTable:
    return parse_regional_trade(io.StringIO(FOUR_REGION_CSV))


def random_integer_table(rng: np.random.Generator, n_loc: int, n_prod: int) -> SpecializationTable:
    """Random positive-integer flow table; integer values keep scaling exact."""
    locations = [f"L{i:03d}" for i in range(n_loc)]
    products = [f"P{j:03d}" for j in range(n_prod)]
    exp = rng.integers(1, 10_000, size=(n_loc, n_prod)).astype(np.float64)
    imp = rng.integers(1, 10_000, size=(n_loc, n_prod)).astype(np.float64)
    return SpecializationTable.from_matrices(locations, products, exp, imp)


def random_sparse_table(rng: np.random.Generator, n_loc: int, n_prod: int) -> SpecializationTable:
    """Like random_integer_table but with zeros sprinkled in."""
    locations = [f"L{i:03d}" for i in range(n_loc)]
    products = [f"P{j:03d}" for j in range(n_prod)]
    exp = rng.integers(0, 50, size=(n_loc, n_prod)).astype(np.float64)
    imp = rng.integers(0, 50, size=(n_loc, n_prod)).astype(np.float64)
    # keep the grand totals positive
    exp[0, 0] = max(exp[0, 0], 1.0)
    imp[0, 0] = max(imp[0, 0], 1.0)
    return SpecializationTable.from_matrices(locations, products, exp, imp)


def trade_frame(rows) -> pd.DataFrame:
    return pd.DataFrame(rows, columns=["geography", "product", "value_imp", "value_exp"])
