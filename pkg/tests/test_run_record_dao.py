import datetime
import json
import os
import unittest

from sqlalchemy import create_engine

from src.models.run_record import Base, RunRecord
from src.run_record_dao import RunRecordDao


class TestRunRecordDao(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.test_db_path = 'test_runs.db'
        cls.db_url = f'sqlite:///{cls.test_db_path}'
        cls.dao = RunRecordDao(db_url=cls.db_url)

    @classmethod
    def tearDownClass(cls):
        if os.path.exists(cls.test_db_path):
            os.remove(cls.test_db_path)

    def setUp(self):
        # Start each test with an empty database
        engine = create_engine(self.db_url)
        Base.metadata.drop_all(engine)
        Base.metadata.create_all(engine)

    def make_record(self, command="fit", minute=0, exit_code=0, summary=None):
        start = datetime.datetime(2025, 3, 1, 9, minute, 0)
        return RunRecord(command=command, seed=1, started_at=start,
                         finished_at=start + datetime.timedelta(seconds=42), exit_code=exit_code,
                         summary=json.dumps(summary or {}), out_dir="out")

    def test_add_and_get(self):
        self.dao.add(self.make_record(summary={"n_triangles": 12}))

        saved = self.dao.get(1)
        self.assertIsNotNone(saved)
        self.assertEqual(saved.command, "fit")
        self.assertEqual(saved.summary_dict, {"n_triangles": 12})
        self.assertEqual(saved.duration_seconds, 42.0)

    def test_add_fills_in_the_id(self):
        record = self.dao.add(self.make_record())
        self.assertEqual(record.id, 1)

    def test_get_nonexistent_record(self):
        self.assertIsNone(self.dao.get(999))

    def test_list_filters_by_command_and_time(self):
        self.dao.add(self.make_record("fit", minute=0))
        self.dao.add(self.make_record("pipeline", minute=10))
        self.dao.add(self.make_record("fit", minute=20, exit_code=2))

        self.assertEqual(len(self.dao.list()), 3)
        fits = self.dao.list(command="fit")
        self.assertEqual([r.exit_code for r in fits], [0, 2])
        late = self.dao.list(since=datetime.datetime(2025, 3, 1, 9, 5, 0))
        self.assertEqual([r.command for r in late], ["pipeline", "fit"])

    def test_latest(self):
        self.assertIsNone(self.dao.latest())
        self.dao.add(self.make_record("fit", minute=0))
        self.dao.add(self.make_record("pipeline", minute=10))

        self.assertEqual(self.dao.latest().command, "pipeline")
        self.assertEqual(self.dao.latest(command="fit").id, 1)

    def test_record_without_timestamps(self):
        record = RunRecord(command="analyze")
        self.assertEqual(record.duration_seconds, 0.0)
        self.assertEqual(record.summary_dict, {})
        self.assertIn("command='analyze'", repr(record))


if __name__ == '__main__':
    unittest.main()
