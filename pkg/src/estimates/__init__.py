# Ad-chain witnesses and derived bounds
