"""OFDM resource grid: numerology, pilot pattern, and symbol placement.

The grid is organised in blocks of `symbols_per_block` OFDM symbols. One
symbol per block carries pilots; on that symbol each used subcarrier belongs
to exactly one spatial stream (subcarrier index modulo the stream count) and
is silent on every other stream. All remaining symbols carry payload on every
used subcarrier of every stream.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

# Cell role codes used in role arrays. Values >= 0 mean "pilot owned by that
# stream"; payload and silent cells get the two negative sentinels.
ROLE_DATA = -1
ROLE_NULL = -2

_PILOT_ALGORITHM = "4qam/philox4x64:v1"


@dataclass(frozen=True)
class OfdmParams:
    """Numerology of the link.

    Defaults give an LTE-like 128-point grid: 72 used subcarriers at 15 kHz
    spacing placed symmetrically around an excluded DC bin, 7-symbol blocks
    with the pilot on the first symbol, and two spatial streams.
    """

    fft_size: int = 128
    used_subcarriers: int = 72
    subcarrier_spacing_hz: float = 15000.0
    cp_len: int = 10
    symbols_per_block: int = 7
    pilot_symbol_index: int = 0
    n_streams: int = 2
    dc_null: bool = True

    def __post_init__(self) -> None:
        if self.fft_size < 2 or (self.fft_size & (self.fft_size - 1)) != 0:
            raise ValueError(f"fft_size must be a power of two, got {self.fft_size}")
        if not 0 < self.used_subcarriers < self.fft_size:
            raise ValueError(
                f"used_subcarriers must be in (0, fft_size), got {self.used_subcarriers}"
            )
        if self.dc_null and self.used_subcarriers % 2 != 0:
            raise ValueError("dc_null placement needs an even used_subcarriers count")
        if self.cp_len < 0:
            raise ValueError("cp_len must be >= 0")
        if self.symbols_per_block < 2:
            raise ValueError("symbols_per_block must leave room for at least one data symbol")
        if not 0 <= self.pilot_symbol_index < self.symbols_per_block:
            raise ValueError("pilot_symbol_index must lie inside the block")
        if self.n_streams < 1:
            raise ValueError("n_streams must be >= 1")
        if self.subcarrier_spacing_hz <= 0:
            raise ValueError("subcarrier_spacing_hz must be positive")

    @property
    def symbol_len(self) -> int:
        """Time samples per OFDM symbol including the cyclic prefix."""
        return self.fft_size + self.cp_len

    @property
    def data_symbols_per_block(self) -> int:
        return self.symbols_per_block - 1

    @property
    def block_capacity(self) -> int:
        """Payload symbols one block carries across all streams."""
        return self.n_streams * self.used_subcarriers * self.data_symbols_per_block


def used_bin_indices(params: OfdmParams) -> np.ndarray:
    """FFT bin index of each used subcarrier, ordered by increasing frequency.

    With `dc_null` the used band is split symmetrically around bin 0, which
    stays empty; subcarrier 0 is the most negative frequency. Without it the
    band covers DC.
    """
    n = params.used_subcarriers
    if params.dc_null:
        half = n // 2
        neg = np.arange(params.fft_size - half, params.fft_size)
        pos = np.arange(1, half + 1)
    else:
        half = n // 2
        neg = np.arange(params.fft_size - half, params.fft_size)
        pos = np.arange(0, n - half)
    return np.concatenate([neg, pos])


def pilot_symbol_indices(params: OfdmParams, n_symbols: int) -> np.ndarray:
    """Grid symbol indices that carry pilots."""
    t = np.arange(n_symbols)
    return t[t % params.symbols_per_block == params.pilot_symbol_index]


def pilot_owner(params: OfdmParams) -> np.ndarray:
    """Owning stream of each used subcarrier on a pilot symbol."""
    return np.arange(params.used_subcarriers) % params.n_streams


def grid_roles(params: OfdmParams, n_symbols: int) -> np.ndarray:
    """Role array of shape (n_streams, n_symbols, used_subcarriers).

    Describes the transmit-side layout: every cell of a data symbol is
    ROLE_DATA; on a pilot symbol a cell is the owning stream's index where it
    owns the subcarrier and ROLE_NULL on the other streams.
    """
    if n_symbols % params.symbols_per_block != 0:
        raise ValueError(
            f"n_symbols={n_symbols} is not a multiple of symbols_per_block={params.symbols_per_block}"
        )
    roles = np.full(
        (params.n_streams, n_symbols, params.used_subcarriers), ROLE_DATA, dtype=np.int8
    )
    owner = pilot_owner(params)
    for t in pilot_symbol_indices(params, n_symbols):
        for s in range(params.n_streams):
            roles[s, t, :] = np.where(owner == s, s, ROLE_NULL)
    return roles


@dataclass(frozen=True)
class PilotSequence:
    """Seeded unit-power 4-QAM pilot values, one per (stream, subcarrier)."""

    seed: int
    values: np.ndarray  # (n_streams, used_subcarriers) complex128
    algorithm: str = _PILOT_ALGORITHM


def make_pilot_sequence(seed: int, params: OfdmParams) -> PilotSequence:
    """Draw the pilot values for every (stream, subcarrier) pair.

    Values are 4-QAM points (+-1 +-j)/sqrt(2), so each pilot cell has unit
    power. The same values repeat on every pilot symbol of the frame.
    """
    rng = np.random.Generator(np.random.Philox(key=seed))
    bits = rng.integers(0, 2, size=(2, params.n_streams, params.used_subcarriers))
    re = 1.0 - 2.0 * bits[0]
    im = 1.0 - 2.0 * bits[1]
    values = (re + 1j * im) / math.sqrt(2.0)
    return PilotSequence(seed=seed, values=values)


@dataclass(frozen=True)
class GridMap:
    """Placement of a payload onto the grid.

    `entries` lists every payload-capable cell as (stream, symbol, subcarrier)
    in the canonical order: stream-major, then time, then subcarrier. The
    first `n_payload` entries carry payload; the rest are padding and transmit
    0+0j.
    """

    params: OfdmParams
    n_payload: int
    entries: np.ndarray  # (capacity, 3) int64

    @property
    def capacity(self) -> int:
        return len(self.entries)

    @property
    def n_padding(self) -> int:
        return self.capacity - self.n_payload

    @property
    def n_blocks(self) -> int:
        return self.capacity // self.params.block_capacity

    @property
    def n_symbols(self) -> int:
        return self.n_blocks * self.params.symbols_per_block


def build_grid_map(params: OfdmParams, n_payload: int) -> GridMap:
    """Lay out `n_payload` symbols over the fewest whole blocks that fit."""
    if n_payload < 0:
        raise ValueError("n_payload must be >= 0")
    n_blocks = max(1, math.ceil(n_payload / params.block_capacity))
    n_symbols = n_blocks * params.symbols_per_block
    t = np.arange(n_symbols)
    data_t = t[t % params.symbols_per_block != params.pilot_symbol_index]
    s_idx, t_idx, k_idx = np.meshgrid(
        np.arange(params.n_streams),
        data_t,
        np.arange(params.used_subcarriers),
        indexing="ij",
    )
    entries = np.stack(
        [s_idx.ravel(), t_idx.ravel(), k_idx.ravel()], axis=1
    ).astype(np.int64)
    return GridMap(params=params, n_payload=n_payload, entries=entries)


@dataclass
class ResourceGrid:
    """Frequency-domain cells of one frame.

    `cells` has shape (n_planes, n_symbols, used_subcarriers). On the transmit
    side a plane is a spatial stream and `roles` describes every cell; on the
    receive side a plane is a receive antenna and `roles` still describes the
    transmit layout the frame was built with.
    """

    params: OfdmParams
    cells: np.ndarray
    roles: np.ndarray = field(repr=False, default=None)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        if self.cells.ndim != 3:
            raise ValueError("cells must be (planes, symbols, subcarriers)")
        if self.cells.shape[2] != self.params.used_subcarriers:
            raise ValueError("subcarrier axis does not match params")
        if self.roles is None:
            self.roles = grid_roles(self.params, self.n_symbols)

    @property
    def n_symbols(self) -> int:
        return self.cells.shape[1]


def map_symbols(
    symbols: np.ndarray,
    gmap: GridMap,
    pilots: PilotSequence,
    strict: bool = True,
) -> ResourceGrid:
    """Place payload symbols and pilots onto a fresh grid.

    Padding cells and silent pilot cells hold exactly 0+0j. With `strict` an
    empty payload is rejected; otherwise it produces an all-padding grid.
    """
    symbols = np.asarray(symbols, dtype=np.complex128).ravel()
    if strict and symbols.size == 0:
        raise ValueError("empty payload (pass strict=False for an all-padding grid)")
    if symbols.size != gmap.n_payload:
        raise ValueError(
            f"payload length {symbols.size} does not match map n_payload {gmap.n_payload}"
        )
    if gmap.n_payload > gmap.capacity:
        raise ValueError("map n_payload exceeds capacity")
    params = gmap.params
    cells = np.zeros(
        (params.n_streams, gmap.n_symbols, params.used_subcarriers), dtype=np.complex128
    )
    owner = pilot_owner(params)
    for t in pilot_symbol_indices(params, gmap.n_symbols):
        for s in range(params.n_streams):
            own = owner == s
            cells[s, t, own] = pilots.values[s, own]
    ent = gmap.entries[: gmap.n_payload]
    cells[ent[:, 0], ent[:, 1], ent[:, 2]] = symbols
    return ResourceGrid(params=params, cells=cells)


def demap_symbols(grid: ResourceGrid, gmap: GridMap) -> np.ndarray:
    """Read the payload cells back in canonical order (padding excluded)."""
    if grid.params != gmap.params:
        raise ValueError("grid and map were built with different params")
    if grid.n_symbols != gmap.n_symbols:
        raise ValueError(
            f"grid has {grid.n_symbols} symbols, map expects {gmap.n_symbols}"
        )
    ent = gmap.entries[: gmap.n_payload]
    return grid.cells[ent[:, 0], ent[:, 1], ent[:, 2]].copy()


def data_grid(params: OfdmParams, cells: np.ndarray) -> ResourceGrid:
    """Wrap raw per-symbol cells as an all-data grid (no pilot structure).

    Measurement helper for waveform statistics of bare constellations; the
    symbol count does not need to align with the block structure.
    """
    cells = np.asarray(cells, dtype=np.complex128)
    if cells.ndim == 2:
        cells = cells[np.newaxis]
    if cells.shape[2] != params.used_subcarriers:
        raise ValueError("subcarrier axis does not match params")
    roles = np.full(cells.shape, ROLE_DATA, dtype=np.int8)
    return ResourceGrid(params=params, cells=cells, roles=roles)
