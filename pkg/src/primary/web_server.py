#!/usr/bin/env python3
"""
Report server for SDMASK
Serves run history and run reports from an output root and starts runs in
the background. Run with waitress via main.py serve.
"""

import os
import pathlib
import signal

from flask import Flask, jsonify

from src.primary import background
from src.primary import settings_manager
from src.primary.routes.runs import runs_blueprint
from src.primary.utils.logger import get_logger

logger = get_logger("server")

_waitress_server = None  # Handle to Waitress server for graceful shutdown


def create_app(out_root=None) -> Flask:
    """
    Build the Flask app

    Args:
        out_root: directory holding run_history.json and one directory per run;
            defaults to the general `output_root` setting
    """
    if out_root is None:
        out_root = settings_manager.get_setting("general", "output_root", "runs")
    out_root = pathlib.Path(out_root)
    out_root.mkdir(parents=True, exist_ok=True)

    app = Flask(__name__)
    app.config["OUT_ROOT"] = str(out_root)
    app.config["JSON_SORT_KEYS"] = False
    app.register_blueprint(runs_blueprint, url_prefix="/api")

    @app.errorhandler(404)
    def not_found(error):
        return jsonify({"error": "not found"}), 404

    @app.errorhandler(405)
    def method_not_allowed(error):
        return jsonify({"error": "method not allowed"}), 405

    logger.info(f"Report server serving runs from {out_root.resolve()}")
    return app


def run_web_server(app: Flask, host: str, port: int, debug: bool = False) -> None:
    """Runs the Flask app using Waitress, or Flask's development server in debug mode."""
    global _waitress_server
    logger.info(f"Starting web server on {host}:{port} (Debug: {debug})...")

    if debug:
        logger.warning("Running in DEBUG mode with Flask development server.")
        try:
            app.run(host=host, port=port, debug=True, use_reloader=False)
        except Exception as e:
            logger.exception(f"Flask development server failed: {e}")
            background.stop_event.set()
        return

    from waitress import create_server

    try:
        logger.info("Running with Waitress production server.")
        _waitress_server = create_server(app, host=host, port=port, threads=8)
        _waitress_server.run()
    except OSError as e:
        # Bad file descriptor is expected when .close() is called during shutdown
        if not background.stop_event.is_set():
            logger.exception(f"Waitress server failed: {e}")
            background.stop_event.set()
        else:
            logger.info("Waitress server stopped.")
    finally:
        _waitress_server = None


def shutdown_handler(signum, frame):
    """Gracefully stop the server and any background runs."""
    logger.warning(f"Received signal {signal.Signals(signum).name}. Initiating shutdown...")
    background.stop_event.set()
    # Close Waitress so run() unblocks
    if _waitress_server is not None:
        _waitress_server.close()


def serve(out_root, host=None, port=None, debug=None) -> None:
    """Blocking entry point for `main.py serve`."""
    host = host or os.environ.get("FLASK_HOST") or settings_manager.get_setting("general", "host", "0.0.0.0")
    port = int(port or os.environ.get("PORT") or settings_manager.get_setting("general", "port", 9705))
    if debug is None:
        debug = os.environ.get("DEBUG", "false").lower() == "true"

    signal.signal(signal.SIGINT, shutdown_handler)
    signal.signal(signal.SIGTERM, shutdown_handler)
    try:
        run_web_server(create_app(out_root), host, port, debug=debug)
    except KeyboardInterrupt:
        logger.info("KeyboardInterrupt received. Shutting down...")
        background.stop_event.set()
    finally:
        background.stop_event.set()
        background.shutdown_threads(timeout=5)
        logger.info("Report server has stopped.")
