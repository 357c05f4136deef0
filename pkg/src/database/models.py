from typing import Optional

from sqlalchemy import Float, ForeignKey, Integer, String, UniqueConstraint
from sqlalchemy.orm import DeclarativeBase, Mapped, mapped_column, relationship


class Base(DeclarativeBase): ...


RUN_PENDING = "pending"
RUN_DONE = "done"
RUN_FAILED = "failed"


class ExperimentRun(Base):
    """
    One repetition of one configuration on one problem

    Attributes:
        id: primary key
        problem: problem name
        config_name: configuration name
        repetition: repetition index within the plan
        seed: derived run seed
        log_path: run-log file, relative to the output directory
        status: pending | done | failed
        evaluations: evaluations performed
        generations: generations performed
        metric: metric row, once computed
    """

    __tablename__ = "experiment_runs"

    id: Mapped[int] = mapped_column(Integer, primary_key=True, autoincrement=True)
    problem: Mapped[str] = mapped_column(String(64), nullable=False, index=True)
    config_name: Mapped[str] = mapped_column(String(64), nullable=False, index=True)
    repetition: Mapped[int] = mapped_column(Integer, nullable=False)
    seed: Mapped[int] = mapped_column(Integer, nullable=False)
    log_path: Mapped[str] = mapped_column(String(512), nullable=False)
    status: Mapped[str] = mapped_column(String(16), default=RUN_PENDING, nullable=False)
    evaluations: Mapped[int] = mapped_column(Integer, default=0, nullable=False)
    generations: Mapped[int] = mapped_column(Integer, default=0, nullable=False)

    metric: Mapped[Optional["RunMetric"]] = relationship(
        "RunMetric", back_populates="run", cascade="all, delete-orphan", uselist=False
    )

    __table_args__ = (
        UniqueConstraint("problem", "config_name", "repetition", name="uq_run_problem_config_rep"),
    )

    def __repr__(self):
        return (
            f"<ExperimentRun(id={self.id}, {self.problem}/{self.config_name}#{self.repetition}, "
            f"status={self.status})>"
        )


class RunMetric(Base):
    """Performance and behavior metrics of one run"""

    __tablename__ = "run_metrics"

    id: Mapped[int] = mapped_column(Integer, primary_key=True, autoincrement=True)
    run_id: Mapped[int] = mapped_column(
        Integer, ForeignKey("experiment_runs.id", ondelete="CASCADE"), nullable=False, unique=True
    )
    hv: Mapped[float] = mapped_column(Float, nullable=False)
    hv_ratio: Mapped[float] = mapped_column(Float, nullable=False)
    auc: Mapped[float] = mapped_column(Float, nullable=False)
    variance: Mapped[float] = mapped_column(Float, nullable=False)
    pf_count: Mapped[int] = mapped_column(Integer, nullable=False)
    nodes: Mapped[int] = mapped_column(Integer, nullable=False)
    edges: Mapped[int] = mapped_column(Integer, nullable=False)
    # merged with the base run of the same repetition; empty for the base itself
    shared: Mapped[Optional[int]] = mapped_column(Integer, nullable=True)

    run: Mapped["ExperimentRun"] = relationship("ExperimentRun", back_populates="metric")

    def __repr__(self):
        return f"<RunMetric(run_id={self.run_id}, hv={self.hv:.4f}, nodes={self.nodes})>"
