from sqlalchemy import create_engine
from sqlalchemy.orm import sessionmaker

from src.models.run_record import Base, RunRecord


class RunRecordDao:
    def __init__(self, db_url='sqlite:///runs.db'):
        self.engine = create_engine(db_url)
        Base.metadata.create_all(self.engine)
        self.Session = sessionmaker(bind=self.engine, expire_on_commit=False)

    def add(self, record: RunRecord) -> RunRecord:
        """Store a finished CLI run.

        Args:
            record (RunRecord): The run to add; its id is filled in.
        """
        session = self.Session()
        session.add(record)
        session.commit()
        session.close()
        return record

    def get(self, record_id):
        session = self.Session()
        record = session.query(RunRecord).filter(RunRecord.id == record_id).first()
        session.close()
        return record

    def list(self, command=None, since=None):
        session = self.Session()
        query = session.query(RunRecord)
        if command is not None:
            query = query.filter(RunRecord.command == command)
        if since is not None:
            query = query.filter(RunRecord.started_at >= since)
        records = query.order_by(RunRecord.id).all()
        session.close()
        return records

    def latest(self, command=None):
        session = self.Session()
        query = session.query(RunRecord)
        if command is not None:
            query = query.filter(RunRecord.command == command)
        record = query.order_by(RunRecord.id.desc()).first()
        session.close()
        return record
