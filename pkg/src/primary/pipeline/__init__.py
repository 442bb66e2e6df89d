"""
Dataset ingestion, run orchestration, reports and dumps
"""
