import sys

from dotenv import load_dotenv

# 加载环境变量
load_dotenv()

from app.cli import cli_dispatch

if __name__ == "__main__":
    sys.exit(cli_dispatch(sys.argv[1:]))
