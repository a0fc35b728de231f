import os
from typing import List, Optional, Sequence

import numpy as np
import pandas as pd

from ..models import HistoryRow, RunSummary, Trajectory
from ..utils.errors import ReportError
from .pareto_service import Repository

FLOAT_FORMAT = "%.17g"

PARETO_FRONT_FILE = "pareto_front.csv"
PARETO_SET_FILE = "pareto_set.csv"
HISTORY_FILE = "history.csv"
BEST_CONTROLS_FILE = "best_controls.csv"
TRAJECTORY_FILE = "trajectory.csv"
SUMMARY_FILE = "summary.json"

REQUIRED_FILES = (PARETO_FRONT_FILE, PARETO_SET_FILE, HISTORY_FILE, SUMMARY_FILE)


class DataService:
    """Service for writing and reading the files of one run directory"""

    def __init__(self, data_path: str):
        self.data_path = str(data_path)
        self._pareto_front_df = None
        self._pareto_set_df = None
        self._history_df = None
        self._summary = None

    def _path(self, file_name: str) -> str:
        return os.path.join(self.data_path, file_name)

    def _write_csv(self, df: pd.DataFrame, file_name: str) -> str:
        file_path = self._path(file_name)
        df.to_csv(file_path, index=False, float_format=FLOAT_FORMAT)
        return file_path

    def _read_csv(self, file_name: str) -> pd.DataFrame:
        file_path = self._path(file_name)
        if not os.path.isfile(file_path):
            raise ReportError(f"missing run file: {file_path}")
        try:
            return pd.read_csv(file_path)
        except (pd.errors.ParserError, pd.errors.EmptyDataError) as e:
            raise ReportError(f"cannot read {file_path}: {e}")

    # Writers

    def write_pareto_front(self, repository: Repository, objective_names: Sequence[str]) -> str:
        rows = []
        for index, member in enumerate(repository):
            row = {"member": index}
            row.update({name: float(v) for name, v in zip(objective_names, member.objectives)})
            row["fidelity"] = np.nan if member.fidelity is None else member.fidelity
            row["terminal_norm"] = np.nan if member.terminal_norm is None else member.terminal_norm
            rows.append(row)
        columns = ["member", *objective_names, "fidelity", "terminal_norm"]
        return self._write_csv(pd.DataFrame(rows, columns=columns), PARETO_FRONT_FILE)

    def write_pareto_set(self, repository: Repository) -> str:
        positions = np.vstack([member.position for member in repository])
        df = pd.DataFrame(positions, columns=[f"x{j}" for j in range(positions.shape[1])])
        df.insert(0, "member", np.arange(len(df)))
        return self._write_csv(df, PARETO_SET_FILE)

    def write_history(self, history: Sequence[HistoryRow], objective_names: Sequence[str]) -> str:
        rows = []
        for entry in history:
            row = {"generation": entry.generation, "repository_size": entry.repository_size}
            row.update({f"min_{name}": v for name, v in zip(objective_names, entry.objective_minima)})
            row["best_fidelity"] = np.nan if entry.best_fidelity is None else entry.best_fidelity
            rows.append(row)
        columns = ["generation", "repository_size", *[f"min_{n}" for n in objective_names], "best_fidelity"]
        return self._write_csv(pd.DataFrame(rows, columns=columns), HISTORY_FILE)

    def write_best_controls(self, times: np.ndarray, controls: np.ndarray, weighted: np.ndarray) -> str:
        data = {"t": times}
        for m, series in enumerate(controls, start=1):
            data[f"u{m}"] = series
        for m, series in enumerate(weighted, start=1):
            data[f"U{m}"] = series
        return self._write_csv(pd.DataFrame(data), BEST_CONTROLS_FILE)

    def write_trajectory(self, euler: Optional[Trajectory], oracle: Trajectory) -> str:
        data = {"t": oracle.times}
        dim = oracle.states.shape[1]
        for k in range(dim):
            euler_states = euler.states[:, k] if euler is not None else np.full(oracle.times.size, np.nan)
            data[f"euler_re_{k}"] = np.real(euler_states)
            data[f"euler_im_{k}"] = np.imag(euler_states)
        for k in range(dim):
            data[f"oracle_re_{k}"] = oracle.states[:, k].real
            data[f"oracle_im_{k}"] = oracle.states[:, k].imag
        return self._write_csv(pd.DataFrame(data), TRAJECTORY_FILE)

    def write_summary(self, summary: RunSummary) -> str:
        file_path = self._path(SUMMARY_FILE)
        with open(file_path, "w", encoding="utf-8") as handle:
            handle.write(summary.model_dump_json(indent=2))
        return file_path

    # Readers

    def load_pareto_front(self) -> pd.DataFrame:
        if self._pareto_front_df is None:
            self._pareto_front_df = self._read_csv(PARETO_FRONT_FILE)
        return self._pareto_front_df

    def load_pareto_set(self) -> pd.DataFrame:
        if self._pareto_set_df is None:
            self._pareto_set_df = self._read_csv(PARETO_SET_FILE)
        return self._pareto_set_df

    def load_history(self) -> pd.DataFrame:
        if self._history_df is None:
            self._history_df = self._read_csv(HISTORY_FILE)
        return self._history_df

    def load_summary(self) -> RunSummary:
        if self._summary is None:
            file_path = self._path(SUMMARY_FILE)
            if not os.path.isfile(file_path):
                raise ReportError(f"missing run file: {file_path}")
            with open(file_path, "r", encoding="utf-8") as handle:
                try:
                    self._summary = RunSummary.model_validate_json(handle.read())
                except ValueError as e:
                    raise ReportError(f"cannot read {file_path}: {e}")
        return self._summary

    def get_positions(self) -> np.ndarray:
        df = self.load_pareto_set()
        return df[[c for c in df.columns if c.startswith("x")]].to_numpy(dtype=float)

    def get_front_objectives(self, objective_names: List[str]) -> np.ndarray:
        df = self.load_pareto_front()
        missing = [name for name in objective_names if name not in df.columns]
        if missing:
            raise ReportError(f"{PARETO_FRONT_FILE} lacks objective columns {missing}")
        return df[objective_names].to_numpy(dtype=float)
