import json

from sqlalchemy import Column, DateTime, Integer, String, Text
from sqlalchemy.orm import declarative_base

Base = declarative_base()


class RunRecord(Base):
    __tablename__ = 'runs'
    id = Column(Integer, primary_key=True)
    command = Column(String, nullable=False)  # CLI subcommand, e.g. "fit" or "pipeline"
    seed = Column(Integer)
    started_at = Column(DateTime)
    finished_at = Column(DateTime)
    exit_code = Column(Integer)
    summary = Column(Text)  # JSON text of the command's summary dict
    out_dir = Column(String)

    @property
    def summary_dict(self) -> dict:
        return json.loads(self.summary) if self.summary else {}

    @property
    def duration_seconds(self) -> float:
        if self.started_at is None or self.finished_at is None:
            return 0.0
        return (self.finished_at - self.started_at).total_seconds()

    def __repr__(self):
        return f"<RunRecord(id={self.id}, command='{self.command}', exit_code={self.exit_code}, out_dir='{self.out_dir}')>"
