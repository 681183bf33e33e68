import os
import logging
from flask import Flask

from config import DEFAULTS_VERSION, load_defaults

# Configure logging
logging.basicConfig(level=os.environ.get("LOG_LEVEL", "INFO").upper(),
                    format="%(asctime)s %(levelname)s %(message)s")


def create_app(overrides=None):
    """Application factory pattern"""
    app = Flask(__name__)

    # Configuration
    app.config["GAUSSBESOV_DEFAULTS_VERSION"] = DEFAULTS_VERSION
    for key, value in load_defaults().items():
        app.config[f"GAUSSBESOV_{key.upper()}"] = value
    if overrides:
        app.config.update(overrides)

    # Register blueprints
    from routes import api_bp
    app.register_blueprint(api_bp, url_prefix='/api')

    # Register CLI commands
    from cli import register_commands
    register_commands(app)

    logging.debug(f"Application created with defaults {DEFAULTS_VERSION}")
    return app
