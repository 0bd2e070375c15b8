from vehiclepipe.cli import main

main()
