from flask import Blueprint, request, jsonify, current_app
import logging

from config import DEFAULTS_VERSION, defaults_from_config
from errors import ToolkitError
from services.run_service import RUN_CONFIG_SCHEMA, RunService, exit_code_for
from utils.helpers import to_jsonable

# Create blueprints
api_bp = Blueprint('api', __name__)


def _service():
    return RunService(defaults_from_config(current_app.config))


def _run(command):
    document = request.get_json(silent=True)
    if document is None:
        return jsonify({"error": "the request body must be a JSON object", "path": ""}), 400
    result = _service().execute(command, document, seed=request.args.get('seed', type=int),
                                refine=request.args.get('refine', 1, type=int))
    body = to_jsonable(dict(result.payload))
    if result.table is not None:
        header, rows = result.table
        body["table"] = {"header": list(header), "rows": to_jsonable(rows)}
    body["exit_code"] = result.exit_code
    return jsonify(body)


@api_bp.errorhandler(ToolkitError)
def handle_toolkit_error(error):
    """Configuration and precondition errors are 400, numerical failures 422"""
    logging.error(f"API request failed: {error}")
    status = 422 if exit_code_for(error) == 3 else 400
    return jsonify({"error": str(error), "path": getattr(error, 'path', "")}), status


@api_bp.route('/eval', methods=['POST'])
def evaluate():
    return _run("eval")


@api_bp.route('/norm', methods=['POST'])
def norm():
    return _run("norm")


@api_bp.route('/besov', methods=['POST'])
def besov():
    return _run("besov")


@api_bp.route('/op', methods=['POST'])
def operator():
    return _run("op")


@api_bp.route('/verify', methods=['POST'])
def verify():
    """Run checks; the suite is heavy, so callers should name the checks they want"""
    return _run("verify")


@api_bp.route('/schema')
def schema():
    return jsonify(RUN_CONFIG_SCHEMA)


@api_bp.route('/defaults')
def defaults():
    return jsonify({"defaults_version": DEFAULTS_VERSION,
                    "defaults": defaults_from_config(current_app.config)})
